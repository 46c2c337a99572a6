#include "ncfem/assembly.hpp"

#include "ncfem/operators.hpp"
#include "ncfem/parallel.hpp"
#include "ncfem/quadrature.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <limits>

namespace ncfem {

namespace {

using Triplets = std::vector<Eigen::Triplet<double>>;

void require_same_mesh(const FeSpace& a, const FeSpace& b)
{
  if (&a.mesh() != &b.mesh())
    throw Error("spaces live on different meshes");
}

// Rows: quadrature point x tensor component; columns: local basis functions.
DenseMatrix derivative_table(const std::vector<Jet>& jets, int nq, int nl, int order)
{
  const int ts = order == 0 ? 1 : tensor_size(order);
  DenseMatrix D(nq * ts, nl);
  for (int q = 0; q < nq; ++q)
    for (int i = 0; i < nl; ++i) {
      const Jet& j = jets[q * nl + i];
      if (order == 0) {
        D(q, i) = j.value;
      } else {
        const DerivTensor d = j.deriv(order);
        for (int k = 0; k < ts; ++k)
          D(q * ts + k, i) = d[k];
      }
    }
  return D;
}

// Sum over triangles of the local Gram matrices of order-th derivatives.
SparseMatrix assemble_gram(const FeSpace& a, const FeSpace& b, int order)
{
  require_same_mesh(a, b);
  const Triangulation& M = a.mesh();
  const int m = order;
  const int da = std::max(0, a.reference().max_degree - m);
  const int db = std::max(0, b.reference().max_degree - m);
  const int degree = std::min(max_triangle_degree, da + db);
  const bool split = a.reference().split || b.reference().split;
  const Tabulation& ta = a.tabulation(degree, split);
  const Tabulation& tb = b.tabulation(degree, split);
  const int nq = ta.n_points();
  const int ts = order == 0 ? 1 : tensor_size(order);
  const int na = a.n_local(), nb = b.n_local();

  const int workers = worker_count();
  std::vector<Triplets> buffers(workers);
  parallel_for(M.n_triangles(), [&](int begin, int end, int w) {
    std::vector<Jet> ja, jb;
    Vector wq(nq * ts);
    for (int t = begin; t < end; ++t) {
      a.basis_jets(t, ta, ja);
      b.basis_jets(t, tb, jb);
      const double area = M.area(t);
      for (int q = 0; q < nq; ++q)
        for (int k = 0; k < ts; ++k)
          wq(q * ts + k) = ta.weights[q] * area;
      const DenseMatrix Da = derivative_table(ja, nq, na, order);
      const DenseMatrix Db = derivative_table(jb, nq, nb, order);
      const DenseMatrix K = Da.transpose() * wq.asDiagonal() * Db;
      const auto ra = a.local_dofs(t);
      const auto rb = b.local_dofs(t);
      for (int i = 0; i < na; ++i) {
        if (ra[i] < 0)
          continue;
        for (int j = 0; j < nb; ++j)
          if (rb[j] >= 0 && K(i, j) != 0.0)
            buffers[w].emplace_back(ra[i], rb[j], K(i, j));
      }
    }
  });
  Triplets all;
  for (auto& buf : buffers)
    all.insert(all.end(), buf.begin(), buf.end());
  SparseMatrix S(a.n_dofs(), b.n_dofs());
  S.setFromTriplets(all.begin(), all.end());
  return S;
}

bool is_smooth(int degree) { return degree < 0; }

// Local monomials ((x - c)/h)^(i,j), i + j <= k, in Poly::index order.
void monomials(const Vec2& x, const Vec2& c, double h, int k, Vector& out)
{
  const Vec2 s = (x - c) / h;
  out.resize(Poly::size(k));
  for (int d = 0; d <= k; ++d)
    for (int j = 0; j <= d; ++j)
      out(Poly::index(d - j, j)) = std::pow(s(0), d - j) * std::pow(s(1), j);
}

} // namespace

int product_degree(int a, int b)
{
  if (is_smooth(a) || is_smooth(b))
    return std::min(max_triangle_degree, std::max(12, std::max(a, 0) + std::max(b, 0)));
  return std::min(max_triangle_degree, a + b);
}

void cell_quadrature(const Triangulation& mesh, int t, int degree, bool split,
                     std::vector<Vec2>& points, std::vector<double>& weights)
{
  const TriangleRule& rule = triangle_rule(degree);
  const TriangleGeometry g(mesh, t);
  const int np = split ? 3 : 1;
  points.clear();
  weights.clear();
  for (int p = 0; p < np; ++p)
    for (int q = 0; q < rule.size(); ++q) {
      const auto& mu = rule.points[q];
      const Vec2 xi = split ? piece_point(p, mu) : Vec2(mu[1], mu[2]);
      points.push_back(g.to_physical(xi));
      weights.push_back(rule.weights[q] * g.area / np);
    }
}

SparseMatrix assemble_stiffness(const FeSpace& space)
{
  return assemble_gram(space, space, space.m());
}

SparseMatrix assemble_mixed_stiffness(const FeSpace& a, const FeSpace& b)
{
  if (a.m() != b.m())
    throw Error("assemble_mixed_stiffness: spaces of different order");
  return assemble_gram(a, b, a.m());
}

SparseMatrix assemble_mass(const FeSpace& a, const FeSpace& b) { return assemble_gram(a, b, 0); }

//----------------------------------------------------------------------------

PointForce locate_point_force(const Triangulation& mesh, const Vec2& p, double beta, double mu)
{
  PointForce f;
  f.point = p;
  f.beta = beta;
  f.mu = mu;
  const double tol = 1e-10 * mesh.h_max();
  for (int v = 0; v < mesh.n_vertices(); ++v)
    if ((mesh.vertex(v) - p).norm() <= tol) {
      f.vertex = v;
      f.point = mesh.vertex(v);
      return f;
    }
  for (int e = 0; e < mesh.n_edges(); ++e) {
    const Edge& E = mesh.edge(e);
    const Vec2 a = mesh.vertex(E.v[0]);
    if (std::abs((p - a).dot(E.normal)) <= tol) {
      const double s = (p - a).dot(mesh.vertex(E.v[1]) - a) / (E.length * E.length);
      if (s > 0.0 && s < 1.0) {
        f.edge = e;
        return f;
      }
    }
  }
  for (int t = 0; t < mesh.n_triangles(); ++t) {
    const auto lam = barycentric(mesh, t, p);
    if (lam[0] > 0.0 && lam[1] > 0.0 && lam[2] > 0.0) {
      f.triangle = t;
      return f;
    }
  }
  throw Error("point force outside the mesh");
}

void RhsData::validate() const
{
  if (m != 1 && m != 2)
    throw Error("RhsData: m must be 1 or 2");
  if (m == 1 && !point_forces.empty())
    throw Error("point forces are not bounded functionals for m=1");
  for (const auto& f : point_forces) {
    if (f.mu < 0.0 || f.mu > 1.0)
      throw Error("point force: mu must lie in [0,1]");
    if ((f.vertex >= 0) + (f.edge >= 0) + (f.triangle >= 0) != 1)
      throw Error("point force: location not resolved (use locate_point_force)");
  }
}

Vector assemble_rhs_original(const FeSpace& space, const RhsData& data)
{
  data.validate();
  if (data.m != space.m())
    throw Error("assemble_rhs: data of order " + std::to_string(data.m) + " for a space of order " +
                std::to_string(space.m()));
  const Triangulation& M = space.mesh();
  const int m = space.m();
  const int d = space.reference().max_degree;
  int degree = 0;
  if (data.G)
    degree = std::max(degree, product_degree(std::max(0, d - m), data.G_degree));
  if (data.g)
    degree = std::max(degree, product_degree(d, data.g_degree));
  const bool split = space.reference().split || data.G_split;
  const int nl = space.n_local();
  const int ts = tensor_size(m);

  Vector b = Vector::Zero(space.n_dofs());
  if (data.G || data.g) {
    const Tabulation& tab = space.tabulation(degree, split);
    const int nq = tab.n_points();
    const int workers = worker_count();
    std::vector<std::vector<std::pair<int, double>>> buffers(workers);
    parallel_for(M.n_triangles(), [&](int begin, int end, int w) {
      std::vector<Jet> jets;
      for (int t = begin; t < end; ++t) {
        space.basis_jets(t, tab, jets);
        const TriangleGeometry geo(M, t);
        Vector local = Vector::Zero(nl);
        for (int q = 0; q < nq; ++q) {
          const Vec2 x = geo.to_physical(tab.ref_points[q]);
          const double wq = tab.weights[q] * geo.area;
          DerivTensor G{};
          if (data.G)
            G = data.G(t, x);
          const double g = data.g ? data.g(t, x) : 0.0;
          for (int i = 0; i < nl; ++i) {
            const Jet& phi = jets[q * nl + i];
            double s = g * phi.value;
            if (data.G) {
              const DerivTensor D = phi.deriv(m);
              for (int k = 0; k < ts; ++k)
                s += G[k] * D[k];
            }
            local(i) += wq * s;
          }
        }
        const auto dofs = space.local_dofs(t);
        for (int i = 0; i < nl; ++i)
          if (dofs[i] >= 0)
            buffers[w].emplace_back(dofs[i], local(i));
      }
    });
    for (const auto& buf : buffers)
      for (const auto& [i, v] : buf)
        b(i) += v;
  }

  std::vector<Jet> phi;
  auto add_point = [&](int t, const Vec2& x, double weight) {
    space.basis_jets(t, x, phi);
    const auto dofs = space.local_dofs(t);
    for (int i = 0; i < nl; ++i)
      if (dofs[i] >= 0)
        b(dofs[i]) += weight * phi[i].value;
  };
  for (const auto& f : data.point_forces) {
    if (f.vertex >= 0) {
      int t = -1;
      for (int s = 0; s < M.n_triangles() && t < 0; ++s)
        for (int k : M.triangle(s))
          if (k == f.vertex)
            t = s;
      add_point(t, M.vertex(f.vertex), f.beta);
    } else if (f.edge >= 0) {
      const Edge& E = M.edge(f.edge);
      if (E.boundary) {
        add_point(E.tri[0], f.point, f.beta);
      } else {
        add_point(E.tri[0], f.point, f.mu * f.beta);
        add_point(E.tri[1], f.point, (1.0 - f.mu) * f.beta);
      }
    } else {
      add_point(f.triangle, f.point, f.beta);
    }
  }
  return b;
}

Vector assemble_rhs_modified(const CompanionMap& map, const RhsData& data)
{
  const Vector bc = assemble_rhs_original(*map.target, data);
  return map.T.transpose() * bc;
}

//----------------------------------------------------------------------------

double PiecewisePolynomial::operator()(int t, const Vec2& x) const
{
  Vector mono;
  monomials(x, center[t], scale[t], degree, mono);
  return coeffs[t].dot(mono);
}

PiecewisePolynomial l2_project(const ScalarField& f, int f_degree, int k, const Triangulation& mesh)
{
  if (k < 0 || 2 * k > max_triangle_degree)
    throw Error("l2_project: unsupported target degree");
  PiecewisePolynomial p;
  p.degree = k;
  const int nt = mesh.n_triangles();
  p.center.resize(nt);
  p.scale.resize(nt);
  p.coeffs.resize(nt);
  const int degree = std::max(2 * k, product_degree(k, f_degree));
  std::vector<Vec2> xs;
  std::vector<double> ws;
  Vector mono;
  for (int t = 0; t < nt; ++t) {
    p.center[t] = mesh.centroid(t);
    p.scale[t] = mesh.diameter(t);
    cell_quadrature(mesh, t, degree, false, xs, ws);
    const int n = Poly::size(k);
    DenseMatrix G = DenseMatrix::Zero(n, n);
    Vector r = Vector::Zero(n);
    for (std::size_t q = 0; q < xs.size(); ++q) {
      monomials(xs[q], p.center[t], p.scale[t], k, mono);
      G += ws[q] * mono * mono.transpose();
      r += ws[q] * f(t, xs[q]) * mono;
    }
    p.coeffs[t] = G.ldlt().solve(r);
  }
  return p;
}

double projection_error(const ScalarField& f, int f_degree, int k, const Triangulation& mesh,
                        const std::vector<double>& weights)
{
  const PiecewisePolynomial p = l2_project(f, f_degree, k, mesh);
  const int fd = is_smooth(f_degree) ? smooth_data : std::max(k, f_degree);
  const int degree = product_degree(fd, fd);
  std::vector<Vec2> xs;
  std::vector<double> ws;
  double s = 0.0;
  for (int t = 0; t < mesh.n_triangles(); ++t) {
    cell_quadrature(mesh, t, degree, false, xs, ws);
    double local = 0.0;
    for (std::size_t q = 0; q < xs.size(); ++q) {
      const double r = f(t, xs[q]) - p(t, xs[q]);
      local += ws[q] * r * r;
    }
    const double w = weights.empty() ? 1.0 : weights[t];
    s += w * w * local;
  }
  return std::sqrt(s);
}

double oscillation(const ScalarField& g, int g_degree, int m, const Triangulation& mesh,
                   HConvention convention)
{
  if (!g)
    return 0.0;
  std::vector<double> w = mesh_size(mesh, convention).per_triangle_h;
  for (double& h : w)
    h = std::pow(h, m);
  return projection_error(g, g_degree, m, mesh, w);
}

double tensor_oscillation(const TensorField& G, int G_degree, int m, const Triangulation& mesh,
                          bool split)
{
  if (!G)
    return 0.0;
  const int degree = product_degree(G_degree, G_degree);
  const int ts = tensor_size(m);
  std::vector<Vec2> xs;
  std::vector<double> ws;
  std::vector<DerivTensor> vals;
  double s = 0.0;
  for (int t = 0; t < mesh.n_triangles(); ++t) {
    cell_quadrature(mesh, t, degree, split, xs, ws);
    vals.resize(xs.size());
    DerivTensor mean{};
    for (std::size_t q = 0; q < xs.size(); ++q) {
      vals[q] = G(t, xs[q]);
      for (int k = 0; k < ts; ++k)
        mean[k] += ws[q] * vals[q][k];
    }
    const double area = mesh.area(t);
    for (int k = 0; k < ts; ++k)
      mean[k] /= area;
    for (std::size_t q = 0; q < xs.size(); ++q)
      for (int k = 0; k < ts; ++k)
        s += ws[q] * (vals[q][k] - mean[k]) * (vals[q][k] - mean[k]);
  }
  return std::sqrt(s);
}

double weighted_norm(const ScalarField& g, int g_degree, int m, const Triangulation& mesh,
                     HConvention convention)
{
  if (!g)
    return 0.0;
  const auto h = mesh_size(mesh, convention).per_triangle_h;
  const int degree = product_degree(g_degree, g_degree);
  std::vector<Vec2> xs;
  std::vector<double> ws;
  double s = 0.0;
  for (int t = 0; t < mesh.n_triangles(); ++t) {
    cell_quadrature(mesh, t, degree, false, xs, ws);
    double local = 0.0;
    for (std::size_t q = 0; q < xs.size(); ++q) {
      const double v = g(t, xs[q]);
      local += ws[q] * v * v;
    }
    s += std::pow(h[t], 2 * m) * local;
  }
  return std::sqrt(s);
}

RhsData preprocess_data(const RhsData& data, const TensorField& Q, int Q_degree,
                        const ScalarField& div_m_Q, int div_degree)
{
  RhsData out = data;
  if (!Q)
    return out;
  const int m = data.m;
  const TensorField G = data.G;
  out.G = [G, Q, m](int t, const Vec2& x) {
    DerivTensor r = Q(t, x);
    const DerivTensor g0 = G ? G(t, x) : DerivTensor{};
    for (int k = 0; k < tensor_size(m); ++k)
      r[k] = g0[k] - r[k];
    return r;
  };
  out.G_degree = is_smooth(data.G_degree) || is_smooth(Q_degree)
                     ? smooth_data
                     : std::max(data.G ? data.G_degree : 0, Q_degree);
  const ScalarField g = data.g;
  const double sign = m % 2 == 0 ? 1.0 : -1.0;
  if (div_m_Q) {
    out.g = [g, div_m_Q, sign](int t, const Vec2& x) {
      return (g ? g(t, x) : 0.0) + sign * div_m_Q(t, x);
    };
    out.g_degree = is_smooth(data.g_degree) || is_smooth(div_degree)
                       ? smooth_data
                       : std::max(data.g ? data.g_degree : 0, div_degree);
  }
  return out;
}

} // namespace ncfem
