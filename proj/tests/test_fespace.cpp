#include <doctest.h>

#include "ncfem/fespace.hpp"
#include "ncfem/quadrature.hpp"

#include <cmath>
#include <random>

using namespace ncfem;

namespace {

Triangulation random_triangle(std::mt19937& rng)
{
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (;;) {
    Vec2 a(u(rng), u(rng)), b(u(rng), u(rng)), c(u(rng), u(rng));
    const double det = (b - a)(0) * (c - a)(1) - (b - a)(1) * (c - a)(0);
    if (std::abs(det) < 0.2)
      continue;
    if (det < 0)
      std::swap(b, c);
    return Triangulation({a, b, c}, {{0, 1, 2}});
  }
}

double edge_mean(const FeFunction& f, int t, int local_edge, bool normal_derivative)
{
  const auto& M = f.space->mesh();
  const auto& tri = M.triangle(t);
  const Vec2 p = M.vertex(tri[(local_edge + 1) % 3]);
  const Vec2 q = M.vertex(tri[(local_edge + 2) % 3]);
  const Vec2 nu = M.edge(M.triangle_edge(t, local_edge)).normal;
  const auto& r = edge_rule(8);
  double s = 0.0;
  for (int i = 0; i < r.size(); ++i) {
    const Jet j = eval(f, t, p + r.points[i] * (q - p));
    s += r.weights[i] * (normal_derivative ? j.grad.dot(nu) : j.value);
  }
  return s;
}

FeFunction random_function(SpacePtr s, std::mt19937& rng)
{
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Vector c(s->n_dofs());
  for (Eigen::Index i = 0; i < c.size(); ++i)
    c(i) = u(rng);
  return FeFunction(s, c);
}

} // namespace

TEST_CASE("dof counts")
{
  const auto m1 = unit_square_mesh(1);
  const auto m2 = unit_square_mesh(2);
  CHECK(build_space(m1, SpaceKind::CR1_0)->n_dofs() == 1);
  CHECK(build_space(m2, SpaceKind::CR1_0)->n_dofs() == 8);
  CHECK(build_space(m2, SpaceKind::MORLEY_0)->n_dofs() == 9);

  for (const auto& m : {unit_square_mesh(3), l_shape_mesh(2)}) {
    const int V = m.n_vertices(), E = m.n_edges(), F = m.n_triangles();
    const int Vi = m.n_interior_vertices(), Ei = m.n_interior_edges();
    CHECK(build_space(m, SpaceKind::CR1_0)->n_dofs() == Ei);
    CHECK(build_space(m, SpaceKind::CR1_full)->n_dofs() == E);
    CHECK(build_space(m, SpaceKind::MORLEY_0)->n_dofs() == Vi + Ei);
    CHECK(build_space(m, SpaceKind::MORLEY_full)->n_dofs() == V + E);
    CHECK(build_space(m, SpaceKind::COMPANION_CR_0)->n_dofs() == Vi + Ei + 3 * F);
    CHECK(build_space(m, SpaceKind::COMPANION_CR_full)->n_dofs() == V + E + 3 * F);
    CHECK(build_space(m, SpaceKind::COMPANION_MORLEY_0)->n_dofs() == 3 * Vi + Ei + 6 * F);
    CHECK(build_space(m, SpaceKind::COMPANION_MORLEY_full)->n_dofs() == 3 * V + E + 6 * F);

    for (int k = 0; k < 8; ++k) {
      const auto s = build_space(m, static_cast<SpaceKind>(k));
      std::vector<int> hits(s->n_dofs(), 0);
      for (int t = 0; t < m.n_triangles(); ++t)
        for (int d : s->local_dofs(t)) {
          CHECK(d < s->n_dofs());
          if (d >= 0)
            ++hits[d];
        }
      for (int h : hits)
        CHECK(h >= 1);
    }
  }
}

TEST_CASE("local duality on random triangles")
{
  std::mt19937 rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const auto m = std::make_shared<const Triangulation>(random_triangle(rng));
    const auto& tri = m->triangle(0);

    const auto cr = build_space(m, SpaceKind::CR1_full);
    for (int j = 0; j < 3; ++j) {
      FeFunction f(cr);
      f.coeffs(cr->local_dofs(0)[j]) = 1.0;
      for (int i = 0; i < 3; ++i)
        CHECK(std::abs(edge_mean(f, 0, i, false) - (i == j)) <= 1e-12);
    }

    const auto mo = build_space(m, SpaceKind::MORLEY_full);
    for (int j = 0; j < 6; ++j) {
      FeFunction f(mo);
      f.coeffs(mo->local_dofs(0)[j]) = 1.0;
      for (int k = 0; k < 3; ++k) {
        CHECK(std::abs(eval(f, 0, m->vertex(tri[k])).value - (k == j)) <= 1e-12);
        CHECK(std::abs(edge_mean(f, 0, k, true) - (3 + k == j)) <= 1e-12);
      }
    }

    // HCT part of the companion: values, gradients, midpoint normal derivatives.
    const auto hc = build_space(m, SpaceKind::COMPANION_MORLEY_full);
    for (int j = 0; j < 12; ++j) {
      FeFunction f(hc);
      f.coeffs(hc->local_dofs(0)[j]) = 1.0;
      for (int k = 0; k < 3; ++k) {
        const Jet jv = eval(f, 0, m->vertex(tri[k]));
        CHECK(std::abs(jv.value - (k == j)) <= 1e-12);
        CHECK(std::abs(jv.grad(0) - (3 + 2 * k == j)) <= 1e-11);
        CHECK(std::abs(jv.grad(1) - (4 + 2 * k == j)) <= 1e-11);
        const auto& E = m->edge(m->triangle_edge(0, k));
        CHECK(std::abs(eval(f, 0, E.midpoint).grad.dot(E.normal) - (9 + k == j)) <= 1e-11);
      }
    }
  }
}

TEST_CASE("evaluation of basis functions")
{
  const auto m = std::make_shared<const Triangulation>(unit_square_mesh(2));
  const auto cr = build_space(m, SpaceKind::CR1_0);
  std::mt19937 rng(5);
  const auto f = random_function(cr, rng);
  for (int t = 0; t < m->n_triangles(); ++t)
    CHECK(eval(f, t, m->centroid(t)).hess.norm() == 0.0);

  // CR basis: 1 at own midpoint, 0 at the other midpoints of the same triangle.
  for (int t = 0; t < m->n_triangles(); ++t)
    for (int i = 0; i < 3; ++i) {
      const int d = cr->local_dofs(t)[i];
      if (d < 0)
        continue;
      FeFunction phi(cr);
      phi.coeffs(d) = 1.0;
      for (int k = 0; k < 3; ++k)
        CHECK(eval(phi, t, m->edge(m->triangle_edge(t, k)).midpoint).value ==
              doctest::Approx(k == i ? 1.0 : 0.0));
    }

  const auto mo = build_space(m, SpaceKind::MORLEY_0);
  const int center = 4; // (0.5, 0.5)
  REQUIRE((m->vertex(center) - Vec2(0.5, 0.5)).norm() < 1e-15);
  FeFunction phi(mo);
  phi.coeffs(mo->vertex_dof(center)) = 1.0;
  CHECK(vertex_eval(phi, center) == doctest::Approx(1.0).epsilon(1e-13));
  for (int v = 0; v < m->n_vertices(); ++v)
    if (v != center)
      CHECK(std::abs(vertex_eval(phi, v)) <= 1e-13);

  CHECK_THROWS_AS(eval(phi, 0, Vec2(5.0, 5.0)), Error);
  CHECK_THROWS_AS(vertex_eval(f, 0), Error);
}

TEST_CASE("constants are representable in the unconstrained spaces")
{
  const auto m = std::make_shared<const Triangulation>(l_shape_mesh(2));
  const auto cr = build_space(m, SpaceKind::CR1_full);
  const auto mo = build_space(m, SpaceKind::MORLEY_full);
  FeFunction one_cr(cr, Vector::Ones(cr->n_dofs()));
  FeFunction one_m(mo);
  for (int v = 0; v < m->n_vertices(); ++v)
    one_m.coeffs(mo->vertex_dof(v)) = 1.0;
  std::mt19937 rng(9);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int k = 0; k < 100; ++k) {
    const int t = static_cast<int>(u(rng) * m->n_triangles()) % m->n_triangles();
    double a = u(rng), b = u(rng);
    if (a + b > 1) {
      a = 1 - a;
      b = 1 - b;
    }
    const auto& tri = m->triangle(t);
    const Vec2 x = (1 - a - b) * m->vertex(tri[0]) + a * m->vertex(tri[1]) + b * m->vertex(tri[2]);
    CHECK(std::abs(eval(one_cr, t, x).value - 1.0) <= 1e-13);
    CHECK(std::abs(eval(one_m, t, x).value - 1.0) <= 1e-13);
  }
}

TEST_CASE("companion spaces are conforming")
{
  std::mt19937 rng(21);
  const auto& hct = hct_reference();
  // Interior subedges of the reference split: pieces k+1 and k+2 share centroid -> v_k.
  const Vec2 rv[3] = {Vec2(0, 0), Vec2(1, 0), Vec2(0, 1)};
  const Vec2 c(1.0 / 3, 1.0 / 3);
  for (const auto& b : hct.basis)
    for (int k = 0; k < 3; ++k)
      for (int s = 0; s < 5; ++s) {
        const Vec2 p = c + (0.1 + 0.2 * s) * (rv[k] - c);
        const Jet ja = b[(k + 1) % 3].jet(p(0), p(1));
        const Jet jb = b[(k + 2) % 3].jet(p(0), p(1));
        CHECK(std::abs(ja.value - jb.value) <= 1e-12);
        CHECK((ja.grad - jb.grad).norm() <= 1e-12);
      }

  for (const auto& m : {unit_square_mesh(2), l_shape_mesh(1)}) {
    const auto mp = std::make_shared<const Triangulation>(m);
    for (SpaceKind k : {SpaceKind::COMPANION_CR_0, SpaceKind::COMPANION_MORLEY_0,
                        SpaceKind::COMPANION_MORLEY_full}) {
      const auto s = build_space(mp, k);
      const auto f = random_function(s, rng);
      for (const auto& e : m.edges()) {
        for (int i = 0; i < 5; ++i) {
          const Vec2 x = m.vertex(e.v[0]) + (0.1 + 0.2 * i) * (m.vertex(e.v[1]) - m.vertex(e.v[0]));
          const Jet a = eval(f, e.tri[0], x);
          if (e.boundary) {
            if (is_homogeneous(k)) {
              CHECK(std::abs(a.value) <= 1e-10);
              if (s->m() == 2)
                CHECK(a.grad.norm() <= 1e-10);
            }
            continue;
          }
          const Jet b = eval(f, e.tri[1], x);
          CHECK(std::abs(a.value - b.value) <= 1e-10);
          if (s->m() == 2)
            CHECK((a.grad - b.grad).norm() <= 1e-10);
        }
      }
    }
  }
}

TEST_CASE("split point evaluation")
{
  const auto m = std::make_shared<const Triangulation>(unit_square_mesh(2));
  const auto mo = build_space(m, SpaceKind::MORLEY_0);
  std::mt19937 rng(2);
  const auto f = random_function(mo, rng);
  // At a vertex both one-sided values agree.
  const int center = 4;
  int e_center = -1;
  for (int e = 0; e < m->n_edges(); ++e)
    if (m->edge(e).v[0] == center || m->edge(e).v[1] == center)
      e_center = e;
  REQUIRE(e_center >= 0);
  CHECK(split_point_eval(f, e_center, m->vertex(center), 0.5) ==
        doctest::Approx(vertex_eval(f, center)).epsilon(1e-13));

  const auto comp = build_space(m, SpaceKind::COMPANION_MORLEY_0);
  const auto g = random_function(comp, rng);
  for (int e = 0; e < m->n_edges(); ++e) {
    if (m->edge(e).boundary)
      continue;
    const Vec2 z = m->edge(e).midpoint;
    CHECK(split_point_eval(g, e, z, 0.0) == doctest::Approx(split_point_eval(g, e, z, 1.0)));
    const double plus = eval(f, m->edge(e).tri[0], z).value;
    const double minus = eval(f, m->edge(e).tri[1], z).value;
    CHECK(split_point_eval(f, e, z, 0.3) == doctest::Approx(0.3 * plus + 0.7 * minus));
  }
  const auto cr = build_space(m, SpaceKind::CR1_0);
  CHECK_THROWS_AS(split_point_eval(FeFunction(cr), 0, Vec2(0, 0), 0.5), Error);
}

TEST_CASE("FeFunction serialization")
{
  const auto m = std::make_shared<const Triangulation>(unit_square_mesh(2));
  const auto s = build_space(m, SpaceKind::MORLEY_0);
  std::mt19937 rng(4);
  const auto f = random_function(s, rng);
  const auto text = function_to_string(f);
  CHECK(text.rfind("ncfem-fun v1 MORLEY_0 9\n", 0) == 0);
  const auto g = function_from_string(s, text);
  CHECK((g.coeffs - f.coeffs).norm() == 0.0);
  CHECK_THROWS_AS(function_from_string(build_space(m, SpaceKind::CR1_0), text), Error);
  CHECK_THROWS_AS(FeFunction(s, Vector::Zero(3)), Error);
}
