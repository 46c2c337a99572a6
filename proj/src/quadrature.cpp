#include "ncfem/quadrature.hpp"

#include "ncfem/common.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <numbers>

namespace ncfem {

void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights)
{
  nodes.assign(n, 0.0);
  weights.assign(n, 0.0);
  // Legendre P_n and its derivative by the three-term recurrence.
  auto legendre = [n](double x, double& dp) {
    double p0 = 1.0, p1 = x;
    for (int k = 2; k <= n; ++k) {
      const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    dp = n * (x * p1 - p0) / (x * x - 1.0);
    return p1;
  };
  for (int i = 0; i < n; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 1.0;
    for (int it = 0; it < 100; ++it) {
      const double dx = legendre(x, dp) / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16)
        break;
    }
    legendre(x, dp);
    nodes[i] = 0.5 * (1.0 - x);
    weights[i] = 1.0 / ((1.0 - x * x) * dp * dp);
  }
}

const EdgeRule& edge_rule(int degree)
{
  if (degree < 0)
    throw Error("edge_rule: negative degree");
  static std::mutex mtx;
  static std::map<int, EdgeRule> cache;
  std::lock_guard lock(mtx);
  auto it = cache.find(degree);
  if (it != cache.end())
    return it->second;
  EdgeRule r;
  r.degree = degree;
  gauss_legendre(degree / 2 + 1, r.points, r.weights);
  return cache.emplace(degree, std::move(r)).first->second;
}

namespace {

TriangleRule build_triangle_rule(int degree)
{
  // x = s, y = (1-s) t with Jacobian (1-s): degree+1 in s, degree in t.
  std::vector<double> s, ws, t, wt;
  gauss_legendre((degree + 1) / 2 + 1, s, ws);
  gauss_legendre(degree / 2 + 1, t, wt);
  TriangleRule r;
  r.degree = degree;
  for (std::size_t i = 0; i < s.size(); ++i)
    for (std::size_t j = 0; j < t.size(); ++j) {
      const double x = s[i];
      const double y = (1.0 - s[i]) * t[j];
      r.points.push_back({1.0 - x - y, x, y});
      r.weights.push_back(2.0 * ws[i] * wt[j] * (1.0 - s[i]));
    }
  return r;
}

} // namespace

const TriangleRule& triangle_rule(int degree)
{
  if (degree < 0 || degree > max_triangle_degree)
    throw Error("triangle_rule: degree " + std::to_string(degree) + " outside [0, 16]");
  static const std::vector<TriangleRule> rules = [] {
    std::vector<TriangleRule> v;
    for (int d = 0; d <= max_triangle_degree; ++d)
      v.push_back(build_triangle_rule(d));
    return v;
  }();
  return rules[degree];
}

} // namespace ncfem
