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

std::shared_ptr<const Triangulation> single(const Vec2& a, const Vec2& b, const Vec2& c)
{
  return std::make_shared<const Triangulation>(std::vector<Vec2>{a, b, c},
                                               std::vector<std::array<int, 3>>{{0, 1, 2}});
}

double cot_at(const Vec2& p, const Vec2& q, const Vec2& r)
{
  const Vec2 a = q - p, b = r - p;
  return a.dot(b) / std::abs(a(0) * b(1) - a(1) * b(0));
}

// int over the reference triangle of x^a y^b = a! b! / (a + b + 2)!
double ref_monomial(int a, int b)
{
  return std::tgamma(a + 1.0) * std::tgamma(b + 1.0) / std::tgamma(a + b + 3.0);
}

Vector random_vector(int n, std::mt19937& rng)
{
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Vector v(n);
  for (int i = 0; i < n; ++i)
    v(i) = u(rng);
  return v;
}

} // namespace

TEST_CASE("CR stiffness on one triangle equals four times the cotangent matrix")
{
  const Vec2 P[3] = {Vec2(0.1, -0.2), Vec2(1.3, 0.4), Vec2(0.2, 0.9)};
  const auto mesh = single(P[0], P[1], P[2]);
  const auto V = build_space(mesh, SpaceKind::CR1_full);
  const DenseMatrix K = DenseMatrix(assemble_stiffness(*V));
  // CR basis 1 - 2 lambda_k; P1 stiffness: K_ij = -cot(theta_l)/2, K_ii = (cot_j + cot_l)/2.
  double cot[3];
  for (int k = 0; k < 3; ++k)
    cot[k] = cot_at(P[k], P[(k + 1) % 3], P[(k + 2) % 3]);
  const auto dofs = V->local_dofs(0);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      const int l = 3 - i - j;
      const double p1 = i == j ? 0.5 * (cot[(i + 1) % 3] + cot[(i + 2) % 3]) : -0.5 * cot[l];
      CHECK(K(dofs[i], dofs[j]) == doctest::Approx(4.0 * p1).epsilon(1e-12));
    }
}

TEST_CASE("Morley energy of a global quadratic")
{
  const auto mesh = square(3);
  const auto V = build_space(mesh, SpaceKind::MORLEY_full);
  const JetField v = [](int, const Vec2& x) {
    Jet j;
    j.value = x(0) * x(0) + 3 * x(0) * x(1) - 0.5 * x(1) * x(1) + x(0);
    j.grad = Vec2(2 * x(0) + 3 * x(1) + 1, 3 * x(0) - x(1));
    j.hess << 2, 3, 3, -1;
    return j;
  };
  const FeFunction f = interpolate(V, v);
  const SparseMatrix K = assemble_stiffness(*V);
  // |D^2 v|^2 = 4 + 9 + 9 + 1 on the unit square.
  CHECK(f.coeffs.dot(K * f.coeffs) == doctest::Approx(23.0).epsilon(1e-12));
  CHECK(Vector::Zero(V->n_dofs()).dot(K * Vector::Zero(V->n_dofs())) == 0.0);
}

TEST_CASE("stiffness matrices are symmetric positive definite")
{
  const auto mesh = square(2);
  for (SpaceKind k : {SpaceKind::CR1_0, SpaceKind::MORLEY_0, SpaceKind::COMPANION_CR_0,
                      SpaceKind::COMPANION_MORLEY_0}) {
    CAPTURE(to_string(k));
    const auto V = build_space(mesh, k);
    const DenseMatrix K = DenseMatrix(assemble_stiffness(*V));
    CHECK((K - K.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * K.cwiseAbs().maxCoeff());
    Eigen::SelfAdjointEigenSolver<DenseMatrix> es(K);
    CHECK(es.eigenvalues().minCoeff() > 0.0);
    const DenseMatrix Km = DenseMatrix(assemble_mixed_stiffness(*V, *V));
    CHECK((K - Km).cwiseAbs().maxCoeff() <= 1e-13 * K.cwiseAbs().maxCoeff());
  }
}

TEST_CASE("CR load of g = 1 is a third of the edge patch area")
{
  const auto mesh = std::make_shared<const Triangulation>(l_shape_mesh(2));
  const auto V = build_space(mesh, SpaceKind::CR1_0);
  RhsData d;
  d.m = 1;
  d.g = [](int, const Vec2&) { return 1.0; };
  const Vector b = assemble_rhs_original(*V, d);
  for (int e = 0; e < mesh->n_edges(); ++e) {
    const int i = V->edge_dof(e);
    if (i < 0)
      continue;
    const Edge& E = mesh->edge(e);
    CHECK(b(i) == doctest::Approx((mesh->area(E.tri[0]) + mesh->area(E.tri[1])) / 3.0).epsilon(1e-13));
  }
}

TEST_CASE("constant G against CR gradients")
{
  const auto mesh = square(3);
  const auto V = build_space(mesh, SpaceKind::CR1_full);
  const Vec2 G(0.7, -1.9);
  RhsData d;
  d.m = 1;
  d.G = [G](int, const Vec2&) { return DerivTensor{G(0), G(1), 0, 0}; };
  const Vector b = assemble_rhs_original(*V, d);
  // Sum over all basis functions tests the gradient of the constant one.
  CHECK(std::abs(b.sum()) <= 1e-13);
  // Hand oracle: grad lambda_k = rot(edge k) / (2|T|), grad phi_k = -2 grad lambda_k.
  Vector ref = Vector::Zero(V->n_dofs());
  for (int t = 0; t < mesh->n_triangles(); ++t) {
    const auto& tri = mesh->triangle(t);
    const auto dofs = V->local_dofs(t);
    for (int k = 0; k < 3; ++k) {
      const Vec2 e = mesh->vertex(tri[(k + 2) % 3]) - mesh->vertex(tri[(k + 1) % 3]);
      const Vec2 grad_lambda = Vec2(-e(1), e(0)) / (2.0 * mesh->area(t));
      ref(dofs[k]) += -2.0 * G.dot(grad_lambda) * mesh->area(t);
    }
  }
  CHECK((b - ref).cwiseAbs().maxCoeff() <= 1e-13);
}

TEST_CASE("Morley vertex force hits the vertex dof only")
{
  const auto mesh = square(2);
  const auto V = build_space(mesh, SpaceKind::MORLEY_0);
  RhsData d;
  d.m = 2;
  d.point_forces.push_back(locate_point_force(*mesh, Vec2(0.5, 0.5), 1.0));
  REQUIRE(d.point_forces[0].vertex >= 0);
  const Vector b = assemble_rhs_original(*V, d);
  Vector e = Vector::Zero(V->n_dofs());
  e(V->vertex_dof(d.point_forces[0].vertex)) = 1.0;
  CHECK((b - e).cwiseAbs().maxCoeff() <= 1e-13);

  // Off-vertex force: mu-weighted one-sided evaluations.
  const Vec2 z(0.25, 0.25);
  const PointForce pf = locate_point_force(*mesh, z, 2.0, 0.3);
  REQUIRE(pf.edge >= 0);
  RhsData d2;
  d2.m = 2;
  d2.point_forces = {pf};
  const Vector b2 = assemble_rhs_original(*V, d2);
  std::mt19937 rng(3);
  const FeFunction f(V, random_vector(V->n_dofs(), rng));
  CHECK(b2.dot(f.coeffs) == doctest::Approx(2.0 * split_point_eval(f, pf.edge, z, 0.3)).epsilon(1e-13));
}

TEST_CASE("invalid point forces are rejected")
{
  const auto mesh = square(2);
  RhsData d;
  d.m = 1;
  d.point_forces.push_back(locate_point_force(*mesh, Vec2(0.5, 0.5), 1.0));
  CHECK_THROWS_AS(assemble_rhs_original(*build_space(mesh, SpaceKind::CR1_0), d), Error);
  d.m = 2;
  d.point_forces[0].mu = 1.5;
  CHECK_THROWS_AS(assemble_rhs_original(*build_space(mesh, SpaceKind::MORLEY_0), d), Error);
  CHECK_THROWS_AS(locate_point_force(*mesh, Vec2(2.0, 0.5), 1.0), Error);
}

TEST_CASE("modified right-hand side")
{
  const auto mesh = square(3);
  for (int m : {1, 2}) {
    CAPTURE(m);
    const auto V = build_space(mesh, nc_kind(m));
    const CompanionMap J = build_companion(V);
    RhsData zero;
    zero.m = m;
    CHECK(assemble_rhs_modified(J, zero).cwiseAbs().maxCoeff() == 0.0);

    // g in P_m: v - Jv is orthogonal to P_m(T), so both load vectors agree.
    RhsData d;
    d.m = m;
    d.g = [m](int, const Vec2& x) { return 1.0 + x(0) - 2.0 * x(1) + (m == 2 ? x(0) * x(1) : 0.0); };
    d.g_degree = m;
    const Vector bo = assemble_rhs_original(*V, d);
    const Vector bm = assemble_rhs_modified(J, d);
    CHECK((bo - bm).cwiseAbs().maxCoeff() <= 1e-12 * bo.cwiseAbs().maxCoeff());

    // Linearity in the data.
    RhsData d2 = d;
    d2.g = [](int, const Vec2& x) { return std::sin(x(0)) * x(1); };
    d2.g_degree = smooth_data;
    RhsData sum = d;
    sum.g = [&](int t, const Vec2& x) { return 2.0 * d.g(t, x) - 3.0 * d2.g(t, x); };
    sum.g_degree = smooth_data;
    const Vector lin = 2.0 * assemble_rhs_modified(J, d) - 3.0 * assemble_rhs_modified(J, d2);
    CHECK((assemble_rhs_modified(J, sum) - lin).cwiseAbs().maxCoeff() <= 1e-13);
  }
}

TEST_CASE("Galerkin consistency of the modified scheme")
{
  const auto mesh = square(4);
  const auto V = build_space(mesh, SpaceKind::MORLEY_0);
  const CompanionMap J = build_companion(V);
  RhsData d;
  d.m = 2;
  d.g = [](int, const Vec2& x) { return std::exp(x(0)) * std::cos(3 * x(1)); };
  d.g_degree = smooth_data;
  const SparseMatrix A = assemble_stiffness(*V);
  const Vector b = assemble_rhs_modified(J, d);
  const Vector u = solve_spd(A, b);
  std::mt19937 rng(5);
  for (int k = 0; k < 5; ++k) {
    const Vector v = random_vector(V->n_dofs(), rng);
    // F(Jv) assembled independently through the companion space load vector.
    const Vector bc = assemble_rhs_original(*J.target, d);
    const double F = bc.dot(J.T * v);
    CHECK(std::abs(u.dot(A * v) - F) <= 1e-9 * (std::abs(F) + b.norm()));
  }
}

TEST_CASE("L2 projection and oscillations")
{
  const auto mesh = single(Vec2(0, 0), Vec2(1, 0), Vec2(0, 1));
  const ScalarField x2 = [](int, const Vec2& x) { return x(0) * x(0); };
  // Normal equations in the basis {1, x, y} with exact monomial integrals.
  Eigen::Matrix3d G;
  Eigen::Vector3d r;
  const int pw[3][2] = {{0, 0}, {1, 0}, {0, 1}};
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j)
      G(i, j) = ref_monomial(pw[i][0] + pw[j][0], pw[i][1] + pw[j][1]);
    r(i) = ref_monomial(pw[i][0] + 2, pw[i][1]);
  }
  const double res2 = ref_monomial(4, 0) - r.dot(G.ldlt().solve(r));
  CHECK(projection_error(x2, 2, 1, *mesh) == doctest::Approx(std::sqrt(res2)).epsilon(1e-12));

  const auto sq = square(3);
  const ScalarField p1 = [](int, const Vec2& x) { return 2.0 - x(0) + 4.0 * x(1); };
  CHECK(oscillation(p1, 1, 1, *sq) <= 1e-14);
  const ScalarField p2 = [](int, const Vec2& x) { return x(0) * x(1) - x(1) * x(1); };
  CHECK(oscillation(p2, 2, 2, *sq) <= 1e-14);
  CHECK(oscillation(p2, 2, 1, *sq) > 1e-4);

  const TensorField c = [](int, const Vec2&) { return DerivTensor{1.5, -2.0, -2.0, 0.5}; };
  CHECK(tensor_oscillation(c, 0, 2, *sq) <= 1e-14);
  const PiecewisePolynomial p = l2_project([](int, const Vec2&) { return 3.25; }, 0, 0, *sq);
  CHECK(p(4, sq->centroid(4)) == doctest::Approx(3.25).epsilon(1e-15));

  // ||h^m g|| for constant g: sqrt(sum h_T^(2m) |T|).
  double ref = 0.0;
  for (int t = 0; t < sq->n_triangles(); ++t)
    ref += std::pow(sq->diameter(t), 4) * sq->area(t);
  CHECK(weighted_norm([](int, const Vec2&) { return 1.0; }, 0, 2, *sq) ==
        doctest::Approx(std::sqrt(ref)).epsilon(1e-13));
}

TEST_CASE("data preprocessing with a gradient field")
{
  const auto mesh = square(3);
  const auto V = build_space(mesh, SpaceKind::CR1_0);
  const CompanionMap J = build_companion(V);
  RhsData d;
  d.m = 1;
  d.g = [](int, const Vec2& x) { return 1.0 + x(0) * x(1); };
  d.g_degree = 2;
  // p = x^3 y - y^2 + x y^2, Q = grad p, div Q = 6 x y - 2 + 2 x.
  const TensorField Q = [](int, const Vec2& x) {
    return DerivTensor{3 * x(0) * x(0) * x(1) + x(1) * x(1),
                       x(0) * x(0) * x(0) - 2 * x(1) + 2 * x(0) * x(1), 0, 0};
  };
  const ScalarField divQ = [](int, const Vec2& x) { return 6 * x(0) * x(1) - 2 + 2 * x(0); };
  const RhsData pre = preprocess_data(d, Q, 3, divQ, 2);
  const Vector bm0 = assemble_rhs_modified(J, d), bm1 = assemble_rhs_modified(J, pre);
  CHECK((bm0 - bm1).cwiseAbs().maxCoeff() <= 1e-10);
  const Vector bo0 = assemble_rhs_original(*V, d), bo1 = assemble_rhs_original(*V, pre);
  CHECK((bo0 - bo1).cwiseAbs().maxCoeff() > 1e-6);

  const RhsData same = preprocess_data(d, nullptr, 0, nullptr, 0);
  CHECK((assemble_rhs_original(*V, same) - bo0).cwiseAbs().maxCoeff() == 0.0);
}
