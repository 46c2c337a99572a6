#include <doctest.h>

#include "ncfem/quadrature.hpp"
#include "ncfem/common.hpp"

#include <cmath>
#include <random>

using namespace ncfem;

namespace {

double factorial(int n)
{
  double f = 1.0;
  for (int k = 2; k <= n; ++k)
    f *= k;
  return f;
}

// Exact integral of x^a y^b over the unit simplex.
double simplex_monomial(int a, int b) { return factorial(a) * factorial(b) / factorial(a + b + 2); }

double rule_monomial(const TriangleRule& r, int a, int b)
{
  double s = 0.0;
  for (int q = 0; q < r.size(); ++q)
    s += r.weights[q] * std::pow(r.points[q][1], a) * std::pow(r.points[q][2], b);
  return 0.5 * s; // reference area
}

} // namespace

TEST_CASE("triangle rules are exact up to their degree")
{
  for (int d = 0; d <= max_triangle_degree; ++d) {
    const auto& r = triangle_rule(d);
    double wsum = 0.0;
    for (double w : r.weights)
      wsum += w;
    CHECK(wsum == doctest::Approx(1.0).epsilon(1e-14));
    for (const auto& p : r.points)
      CHECK(p[0] + p[1] + p[2] == doctest::Approx(1.0).epsilon(1e-15));
    for (int a = 0; a <= d; ++a)
      for (int b = 0; a + b <= d; ++b)
        CHECK(std::abs(rule_monomial(r, a, b) - simplex_monomial(a, b)) <=
              1e-13 * simplex_monomial(a, b) + 1e-17);
  }
  CHECK(triangle_rule(1).size() >= 1);
  CHECK(rule_monomial(triangle_rule(16), 8, 8) ==
        doctest::Approx(factorial(8) * factorial(8) / factorial(18)).epsilon(1e-12));
  CHECK_THROWS_AS(triangle_rule(17), Error);
  CHECK_THROWS_AS(triangle_rule(-1), Error);
}

TEST_CASE("random degree-16 polynomial against the monomial oracle")
{
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  double exact = 0.0, quad = 0.0, scale = 0.0;
  const auto& r = triangle_rule(16);
  for (int a = 0; a <= 16; ++a)
    for (int b = 0; a + b <= 16; ++b) {
      const double c = u(rng);
      exact += c * simplex_monomial(a, b);
      quad += c * rule_monomial(r, a, b);
      scale += std::abs(c) * simplex_monomial(a, b);
    }
  CHECK(std::abs(exact - quad) <= 1e-12 * scale);
}

TEST_CASE("affine invariance on a physical triangle")
{
  // f(x,y) = x^3 y^2 + 2 x y^4 - y^5 on the triangle (0.3,0.1), (1.7,0.4), (0.6,1.9).
  const Vec2 a(0.3, 0.1), b(1.7, 0.4), c(0.6, 1.9);
  auto f = [](const Vec2& p) {
    return std::pow(p(0), 3) * p(1) * p(1) + 2 * p(0) * std::pow(p(1), 4) - std::pow(p(1), 5);
  };
  const double area = 0.5 * ((b - a)(0) * (c - a)(1) - (b - a)(1) * (c - a)(0));
  const auto& r5 = triangle_rule(5);
  const auto& r12 = triangle_rule(12);
  double s5 = 0.0, s12 = 0.0;
  for (int q = 0; q < r5.size(); ++q)
    s5 += r5.weights[q] * f(r5.points[q][0] * a + r5.points[q][1] * b + r5.points[q][2] * c);
  for (int q = 0; q < r12.size(); ++q)
    s12 += r12.weights[q] * f(r12.points[q][0] * a + r12.points[q][1] * b + r12.points[q][2] * c);
  CHECK(s5 * area == doctest::Approx(s12 * area).epsilon(1e-12));
}

TEST_CASE("edge rules")
{
  const auto& r1 = edge_rule(1);
  CHECK(r1.size() == 1);
  CHECK(r1.points[0] == doctest::Approx(0.5));
  const auto& r9 = edge_rule(9);
  CHECK(r9.size() == 5);
  double s = 0.0;
  for (int q = 0; q < r9.size(); ++q)
    s += r9.weights[q] * std::pow(r9.points[q], 9);
  CHECK(s == doctest::Approx(0.1).epsilon(1e-14));

  std::mt19937 rng(3);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  double c[10];
  for (double& ci : c)
    ci = u(rng);
  double exact = 0.0, quad = 0.0;
  for (int k = 0; k <= 9; ++k)
    exact += c[k] / (k + 1); // antiderivative at 1
  for (int q = 0; q < r9.size(); ++q) {
    double v = 0.0;
    for (int k = 9; k >= 0; --k)
      v = v * r9.points[q] + c[k];
    quad += r9.weights[q] * v;
  }
  CHECK(std::abs(exact - quad) <= 1e-13);
  CHECK_THROWS_AS(edge_rule(-2), Error);
}
