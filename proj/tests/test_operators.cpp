#include <doctest.h>

#include "ncfem/assembly.hpp"
#include "ncfem/operators.hpp"

#include <cmath>
#include <random>

using namespace ncfem;

namespace {

std::shared_ptr<const Triangulation> square(int n)
{
  return std::make_shared<const Triangulation>(unit_square_mesh(n));
}

Vector random_vector(int n, std::mt19937& rng)
{
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Vector v(n);
  for (int i = 0; i < n; ++i)
    v(i) = u(rng);
  return v;
}

// Brute-force quadrature of int_T D^m(f - g) : D^m(f - g) and int_T (f - g)^2 h_T^(-2m).
struct Diff {
  double energy = 0.0;
  double scaled_l2 = 0.0;
};

Diff brute_diff(const FeFunction& f, const FeFunction& g)
{
  const Triangulation& M = f.space->mesh();
  const int m = f.space->m();
  std::vector<Vec2> xs;
  std::vector<double> ws;
  Diff d;
  for (int t = 0; t < M.n_triangles(); ++t) {
    cell_quadrature(M, t, 16, true, xs, ws);
    const double h = M.diameter(t);
    for (std::size_t q = 0; q < xs.size(); ++q) {
      Jet a = eval(f, t, xs[q]);
      a.axpy(-1.0, eval(g, t, xs[q]));
      const DerivTensor D = a.deriv(m);
      d.energy += ws[q] * contract(D, D, m);
      d.scaled_l2 += ws[q] * a.value * a.value / std::pow(h, 2 * m);
    }
  }
  d.energy = std::sqrt(d.energy);
  d.scaled_l2 = std::sqrt(d.scaled_l2);
  return d;
}

double energy(const FeFunction& f)
{
  return brute_diff(f, FeFunction(f.space)).energy;
}

} // namespace

TEST_CASE("interpolation reproduces P1 and P2")
{
  const auto mesh = square(3);
  const auto cr = build_space(mesh, SpaceKind::CR1_full);
  const JetField p1 = [](int, const Vec2& x) {
    Jet j;
    j.value = 0.3 + 2.0 * x(0) - x(1);
    j.grad = Vec2(2.0, -1.0);
    return j;
  };
  const FeFunction fc = interpolate(cr, p1);
  for (int e = 0; e < mesh->n_edges(); ++e)
    CHECK(fc.coeffs(cr->edge_dof(e)) == doctest::Approx(p1(0, mesh->edge(e).midpoint).value).epsilon(1e-14));

  const auto mo = build_space(mesh, SpaceKind::MORLEY_full);
  const JetField p2 = [](int, const Vec2& x) {
    Jet j;
    j.value = x(0) * x(0) - 2 * x(0) * x(1) + 0.5 * x(1) + 1.0;
    j.grad = Vec2(2 * x(0) - 2 * x(1), -2 * x(0) + 0.5);
    j.hess << 2, -2, -2, 0;
    return j;
  };
  const FeFunction fm = interpolate(mo, p2);
  std::mt19937 rng(2);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int k = 0; k < 50; ++k) {
    const int t = k % mesh->n_triangles();
    double a = u(rng), b = u(rng);
    if (a + b > 1.0) {
      a = 1.0 - a;
      b = 1.0 - b;
    }
    const auto& tri = mesh->triangle(t);
    const Vec2 x = mesh->vertex(tri[0]) + a * (mesh->vertex(tri[1]) - mesh->vertex(tri[0])) +
                   b * (mesh->vertex(tri[2]) - mesh->vertex(tri[0]));
    const Jet j = eval(fm, t, x);
    CHECK(j.value == doctest::Approx(p2(t, x).value).epsilon(1e-12));
    CHECK((j.hess - p2(t, x).hess).norm() <= 1e-11);
  }
}

TEST_CASE("CR interpolation of x^2 on the diagonal edge")
{
  const auto mesh = square(1);
  const auto cr = build_space(mesh, SpaceKind::CR1_0);
  REQUIRE(cr->n_dofs() == 1);
  const FeFunction f = interpolate(cr, [](int, const Vec2& x) {
    Jet j;
    j.value = x(0) * x(0);
    return j;
  });
  int interior = -1;
  for (int e = 0; e < mesh->n_edges(); ++e)
    if (!mesh->edge(e).boundary)
      interior = e;
  const Edge& E = mesh->edge(interior);
  // Mean of x^2 on a segment with end abscissae a, b: (a^2 + ab + b^2) / 3.
  const double a = mesh->vertex(E.v[0])(0), b = mesh->vertex(E.v[1])(0);
  CHECK(f.coeffs(0) == doctest::Approx((a * a + a * b + b * b) / 3.0).epsilon(1e-14));
  CHECK(f.coeffs(0) == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
}

TEST_CASE("best-approximation orthogonality of the interpolation")
{
  std::mt19937 rng(11);
  for (int m : {1, 2}) {
    CAPTURE(m);
    const auto mesh = std::make_shared<const Triangulation>(l_shape_mesh(1));
    const auto nc = build_space(mesh, nc_kind(m));
    const auto conf = build_space(mesh, companion_kind(nc_kind(m)));
    const FeFunction v(conf, random_vector(conf->n_dofs(), rng));
    CHECK(best_approx_orthogonality_check(nc, v) <= 1e-10 * energy(v));
    const FeFunction w(nc, random_vector(nc->n_dofs(), rng));
    const CompanionMap J = build_companion(nc);
    CHECK(best_approx_orthogonality_check(nc, companion(J, w)) <= 1e-10 * energy(w));
  }
}

TEST_CASE("companion: right inverse, moments and conformity")
{
  std::mt19937 rng(7);
  for (SpaceKind kind : {SpaceKind::CR1_0, SpaceKind::CR1_full, SpaceKind::MORLEY_0,
                         SpaceKind::MORLEY_full}) {
    for (int n : {1, 2, 3}) {
      CAPTURE(to_string(kind));
      CAPTURE(n);
      const auto mesh = square(n);
      const auto V = build_space(mesh, kind);
      const CompanionMap J = build_companion(V);
      REQUIRE(J.T.rows() == J.target->n_dofs());
      REQUIRE(J.T.cols() == V->n_dofs());
      const SparseMatrix P = interpolation_matrix(*V, *J.target);
      const SparseMatrix PJ = P * J.T;

      CHECK(companion(J, FeFunction(V)).coeffs.cwiseAbs().maxCoeff() == 0.0);
      for (int k = 0; k < 50; ++k) {
        const Vector c = random_vector(V->n_dofs(), rng);
        CHECK((PJ * c - c).cwiseAbs().maxCoeff() <= 1e-11 * c.cwiseAbs().maxCoeff());
      }

      // P_m moments of v - Jv on each triangle by split quadrature.
      const int m = V->m();
      const FeFunction v(V, random_vector(V->n_dofs(), rng));
      const FeFunction w = companion(J, v);
      std::vector<Vec2> xs;
      std::vector<double> ws;
      for (int t = 0; t < mesh->n_triangles(); ++t) {
        cell_quadrature(*mesh, t, 12, true, xs, ws);
        const Vec2 c = mesh->centroid(t);
        double mom[6] = {}, scale = 0.0;
        for (std::size_t q = 0; q < xs.size(); ++q) {
          const double a = eval(v, t, xs[q]).value, b = eval(w, t, xs[q]).value;
          const Vec2 y = xs[q] - c;
          const double test[6] = {1, y(0), y(1), y(0) * y(0), y(0) * y(1), y(1) * y(1)};
          for (int r = 0; r < (m == 1 ? 3 : 6); ++r)
            mom[r] += ws[q] * (a - b) * test[r];
          scale += ws[q] * std::abs(a);
        }
        for (double x : mom)
          CHECK(std::abs(x) <= 1e-11 * std::max(scale, 1e-300));
      }

      // Jumps of Jv (and of its normal derivative for m=2) across interior edges.
      for (int e = 0; e < mesh->n_edges(); ++e) {
        const Edge& E = mesh->edge(e);
        if (E.boundary)
          continue;
        for (int s = 1; s <= 5; ++s) {
          const Vec2 x = mesh->vertex(E.v[0]) +
                         (s / 6.0) * (mesh->vertex(E.v[1]) - mesh->vertex(E.v[0]));
          const Jet a = eval(w, E.tri[0], x), b = eval(w, E.tri[1], x);
          CHECK(std::abs(a.value - b.value) <= 1e-10);
          if (m == 2)
            CHECK(std::abs((a.grad - b.grad).dot(E.normal)) <= 1e-10);
        }
      }
    }
  }
}

TEST_CASE("companion of a global P1 function")
{
  const auto mesh = square(3);
  const auto V = build_space(mesh, SpaceKind::CR1_full);
  const JetField p1 = [](int, const Vec2& x) {
    Jet j;
    j.value = 1.0 - x(0) + 0.5 * x(1);
    j.grad = Vec2(-1.0, 0.5);
    return j;
  };
  const FeFunction v = interpolate(V, p1);
  const CompanionMap J = build_companion(V);
  const FeFunction w = companion(J, v);
  const FeFunction back(V, interpolation_matrix(*V, *J.target) * w.coeffs);
  CHECK((back.coeffs - v.coeffs).cwiseAbs().maxCoeff() <= 1e-14);
  CHECK(brute_diff(v, w).energy <= 1e-12);
}

TEST_CASE("Pythagoras and the interpolation estimate")
{
  std::mt19937 rng(19);
  for (int m : {1, 2}) {
    CAPTURE(m);
    const auto mesh = std::make_shared<const Triangulation>(l_shape_mesh(1));
    const auto V = build_space(mesh, nc_kind(m));
    const CompanionMap J = build_companion(V);
    const SparseMatrix P = interpolation_matrix(*V, *J.target);
    const double kappa = kappa_constant(m);
    for (int k = 0; k < 10; ++k) {
      const FeFunction v = companion(J, FeFunction(V, random_vector(V->n_dofs(), rng)));
      const FeFunction Iv(V, P * v.coeffs);
      const FeFunction w(V, random_vector(V->n_dofs(), rng));
      const double lhs = std::pow(brute_diff(v, w).energy, 2);
      const double a = brute_diff(v, Iv).energy, b = brute_diff(w, Iv).energy;
      CHECK(lhs == doctest::Approx(a * a + b * b).epsilon(1e-10));
      CHECK(brute_diff(v, Iv).scaled_l2 <= kappa * a + 1e-12);
    }
  }
}

TEST_CASE("Lambda0 eigencharacterization")
{
  SUBCASE("identity double")
  {
    const auto V = build_space(square(2), SpaceKind::CR1_0);
    const SparseMatrix A = assemble_stiffness(*V);
    const Lambda0Result r = compute_lambda0(V, A, A);
    CHECK(r.lambda_max == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(r.lambda0 <= 1e-6);
    CHECK(r.c_qo == doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("single CR dof: direct quotient")
  {
    const auto V = build_space(square(1), SpaceKind::CR1_0);
    const CompanionMap J = build_companion(V);
    const Lambda0Result r = compute_lambda0(J);
    FeFunction phi(V);
    phi.coeffs(0) = 1.0;
    const double q = brute_diff(phi, companion(J, phi)).energy / energy(phi);
    CHECK(r.lambda0 == doctest::Approx(q).epsilon(1e-10));
    CHECK(r.dim == 1);
  }
  SUBCASE("Morley residual and the defect identity")
  {
    const auto V = build_space(square(2), SpaceKind::MORLEY_0);
    const CompanionMap J = build_companion(V);
    const Lambda0Result r = compute_lambda0(J);
    CHECK(r.residual <= 1e-9);
    CHECK(energy(r.extremal) == doctest::Approx(1.0).epsilon(1e-10));
    const double defect = brute_diff(r.extremal, companion(J, r.extremal)).energy;
    CHECK(defect * defect == doctest::Approx(r.lambda0 * r.lambda0).epsilon(1e-8));
    CHECK(r.c_qo * r.c_qo == doctest::Approx(1.0 + r.lambda0 * r.lambda0).epsilon(1e-14));
  }
  SUBCASE("nonconforming spaces have Lambda0 > 0")
  {
    for (SpaceKind k : {SpaceKind::CR1_0, SpaceKind::MORLEY_0, SpaceKind::CR1_full,
                        SpaceKind::MORLEY_full}) {
      CAPTURE(to_string(k));
      const auto V = build_space(square(2), k);
      CHECK(compute_lambda0(build_companion(V)).lambda0 > 1e-3);
    }
  }
}

TEST_CASE("companion defect bounded by the distance to the companion space")
{
  // |||v - Jv||| / min_{w conforming} |||v - w||| stays bounded under refinement.
  std::mt19937 rng(23);
  for (int m : {1, 2}) {
    double worst[2] = {0.0, 0.0};
    for (int level = 0; level < 2; ++level) {
      const auto V = build_space(square(2 << level), nc_kind(m));
      const CompanionMap J = build_companion(V);
      const SparseMatrix Kc = assemble_stiffness(*J.target);
      const SparseMatrix Kx = assemble_mixed_stiffness(*J.target, *V);
      const SparseMatrix A = assemble_stiffness(*V);
      for (int k = 0; k < 10; ++k) {
        const Vector c = random_vector(V->n_dofs(), rng);
        const Vector w = solve_spd(Kc, Kx * c);
        const double dist2 = c.dot(A * c) - w.dot(Kx * c);
        const Vector Jc = J.T * c;
        const double defect2 = c.dot(A * c) - 2.0 * Jc.dot(Kx * c) + Jc.dot(Kc * Jc);
        worst[level] = std::max(worst[level], std::sqrt(defect2 / dist2));
      }
    }
    CAPTURE(m);
    CHECK(worst[1] < 2.0 * worst[0] + 1.0);
  }
}

TEST_CASE("interpolation constants")
{
  CHECK(kappa_constant(2) == 0.25745784465);
  const double j = bessel_j1_first_root();
  CHECK(j == doctest::Approx(3.8317059702).epsilon(1e-10));
  CHECK(std::abs(bessel_j1(j)) <= 1e-12);
  CHECK(kappa_constant(1) == doctest::Approx(std::sqrt(1.0 / (j * j) + 1.0 / 48.0)).epsilon(1e-15));
  CHECK(kappa_constant(1) > 0.0);
  // J_1(1) from tables.
  CHECK(bessel_j1(1.0) == doctest::Approx(0.4400505857449335).epsilon(1e-14));
  CHECK_THROWS_AS(kappa_constant(3), Error);
}
