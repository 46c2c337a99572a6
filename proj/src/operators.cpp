#include "ncfem/operators.hpp"

#include "ncfem/assembly.hpp"
#include "ncfem/parallel.hpp"
#include "ncfem/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace ncfem {

namespace {

// One nonconforming dof as a linear functional: sum_q w_q (value or d/dn) at points of t.
struct DofFunctional {
  int dof = -1;
  int t = -1;
  bool normal = false;
  Vec2 n = Vec2::Zero();
  std::vector<Vec2> x;
  std::vector<double> w;
};

int some_triangle_at_vertex(const std::vector<std::vector<int>>& vt, int v)
{
  if (vt[v].empty())
    throw TopologyError("vertex " + std::to_string(v) + " belongs to no triangle");
  return vt[v].front();
}

std::vector<DofFunctional> dof_functionals(const FeSpace& nc, int edge_degree)
{
  if (is_companion(nc.kind()))
    throw Error("interpolation target must be a CR or Morley space");
  const Triangulation& M = nc.mesh();
  std::vector<DofFunctional> out;
  const EdgeRule& rule = edge_rule(std::max(0, edge_degree));
  for (int e = 0; e < M.n_edges(); ++e) {
    const int d = nc.edge_dof(e);
    if (d < 0)
      continue;
    const Edge& E = M.edge(e);
    DofFunctional f;
    f.dof = d;
    f.t = E.tri[0];
    f.normal = nc.m() == 2;
    f.n = E.normal;
    const Vec2 a = M.vertex(E.v[0]), b = M.vertex(E.v[1]);
    for (int q = 0; q < rule.size(); ++q) {
      f.x.push_back(a + rule.points[q] * (b - a));
      f.w.push_back(rule.weights[q]);
    }
    out.push_back(std::move(f));
  }
  if (nc.m() == 2) {
    const auto vt = M.vertex_triangles();
    for (int v = 0; v < M.n_vertices(); ++v) {
      const int d = nc.vertex_dof(v);
      if (d < 0)
        continue;
      DofFunctional f;
      f.dof = d;
      f.t = some_triangle_at_vertex(vt, v);
      f.x = {M.vertex(v)};
      f.w = {1.0};
      out.push_back(std::move(f));
    }
  }
  return out;
}

using SparseRow = std::vector<std::pair<int, double>>;

void add_row(SparseRow& dst, const SparseRow& src, double s)
{
  if (s == 0.0)
    return;
  for (const auto& [j, v] : src)
    dst.emplace_back(j, s * v);
}

void compress(SparseRow& row)
{
  std::map<int, double> acc;
  for (const auto& [j, v] : row)
    acc[j] += v;
  row.clear();
  for (const auto& [j, v] : acc)
    if (v != 0.0)
      row.emplace_back(j, v);
}

SparseMatrix rows_to_matrix(const std::vector<SparseRow>& rows, int n_cols)
{
  std::vector<Eigen::Triplet<double>> trip;
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (const auto& [j, v] : rows[i])
      trip.emplace_back(static_cast<int>(i), j, v);
  SparseMatrix S(static_cast<int>(rows.size()), n_cols);
  S.setFromTriplets(trip.begin(), trip.end());
  S.prune(0.0);
  return S;
}

// Reference integrals (divided by |T|) of products of reference basis functions with the
// test polynomials; both are affine invariant.
DenseMatrix reference_moments(const ReferenceElement& ref, const std::vector<int>& cols,
                              const std::vector<Poly>& tests, int degree)
{
  const Tabulation tab = tabulate(ref, degree);
  DenseMatrix R = DenseMatrix::Zero(static_cast<int>(tests.size()), static_cast<int>(cols.size()));
  for (int q = 0; q < tab.n_points(); ++q) {
    const Vec2& xi = tab.ref_points[q];
    for (std::size_t r = 0; r < tests.size(); ++r) {
      const double p = tests[r](xi(0), xi(1));
      for (std::size_t c = 0; c < cols.size(); ++c)
        R(r, c) += tab.weights[q] * p * tab.jets[q * tab.n_basis + cols[c]].value;
    }
  }
  return R;
}

CompanionMap build_cr_companion(SpacePtr source)
{
  const FeSpace& S = *source;
  const Triangulation& M = S.mesh();
  SpacePtr target = build_space(S.mesh_ptr(), companion_kind(S.kind()));
  const FeSpace& C = *target;
  std::vector<SparseRow> rows(C.n_dofs());

  // Vertex values: average of the one-sided CR limits v|_T(z_j) = sum_k c_k - 2 c_j.
  const auto vt = M.vertex_triangles();
  for (int v = 0; v < M.n_vertices(); ++v) {
    const int d = C.vertex_dof(v);
    if (d < 0)
      continue;
    const double w = 1.0 / static_cast<double>(vt[v].size());
    for (int t : vt[v]) {
      const auto& tri = M.triangle(t);
      const int j = static_cast<int>(std::find(tri.begin(), tri.end(), v) - tri.begin());
      const auto src = S.local_dofs(t);
      for (int k = 0; k < 3; ++k)
        if (src[k] >= 0)
          rows[d].emplace_back(src[k], w * (k == j ? -1.0 : 1.0));
    }
    compress(rows[d]);
  }

  // Edge bubbles restore the edge means: the bubble 6 lambda_a lambda_b has mean one.
  for (int e = 0; e < M.n_edges(); ++e) {
    const int d = C.edge_dof(e);
    if (d < 0)
      continue;
    const int s = S.edge_dof(e);
    if (s >= 0)
      rows[d].emplace_back(s, 1.0);
    for (int v : M.edge(e).v) {
      const int dv = C.vertex_dof(v);
      if (dv >= 0)
        add_row(rows[d], rows[dv], -0.5);
    }
    compress(rows[d]);
  }

  // Cell bubbles: int_T (v - Jv) lambda_q = 0 for q = 0, 1, 2.
  std::vector<Poly> tests;
  for (int q = 0; q < 3; ++q)
    tests.push_back(Poly::barycentric(q));
  const DenseMatrix Rv = reference_moments(cr_reference(), {0, 1, 2}, tests, 5);
  const DenseMatrix Rw = reference_moments(C.reference(), {0, 1, 2, 3, 4, 5}, tests, 5);
  const DenseMatrix Mb = reference_moments(C.reference(), {6, 7, 8}, tests, 5);
  const DenseMatrix Minv = Mb.inverse();
  const DenseMatrix Av = Minv * Rv, Aw = Minv * Rw;
  for (int t = 0; t < M.n_triangles(); ++t) {
    const auto src = S.local_dofs(t);
    const auto tgt = C.local_dofs(t);
    for (int r = 0; r < 3; ++r) {
      const int d = tgt[6 + r];
      for (int k = 0; k < 3; ++k)
        if (src[k] >= 0)
          rows[d].emplace_back(src[k], Av(r, k));
      for (int j = 0; j < 6; ++j)
        if (tgt[j] >= 0)
          add_row(rows[d], rows[tgt[j]], -Aw(r, j));
      compress(rows[d]);
    }
  }
  return {source, target, rows_to_matrix(rows, S.n_dofs())};
}

CompanionMap build_morley_companion(SpacePtr source)
{
  const FeSpace& S = *source;
  const Triangulation& M = S.mesh();
  SpacePtr target = build_space(S.mesh_ptr(), companion_kind(S.kind()));
  const FeSpace& C = *target;
  std::vector<SparseRow> rows(C.n_dofs());

  // Vertex values copied, vertex gradients averaged over the adjacent triangles.
  const auto vt = M.vertex_triangles();
  std::vector<Jet> phi;
  for (int v = 0; v < M.n_vertices(); ++v) {
    const int d = C.vertex_dof(v, 0);
    if (d < 0)
      continue;
    const int s = S.vertex_dof(v);
    if (s >= 0)
      rows[d].emplace_back(s, 1.0);
    const double w = 1.0 / static_cast<double>(vt[v].size());
    for (int t : vt[v]) {
      S.basis_jets(t, M.vertex(v), phi);
      const auto src = S.local_dofs(t);
      for (int i = 0; i < S.n_local(); ++i)
        if (src[i] >= 0) {
          rows[d + 1].emplace_back(src[i], w * phi[i].grad(0));
          rows[d + 2].emplace_back(src[i], w * phi[i].grad(1));
        }
    }
    compress(rows[d + 1]);
    compress(rows[d + 2]);
  }

  // Midpoint normal derivative from Simpson's rule on the quadratic normal derivative of the
  // HCT function, so that its edge mean equals the Morley dof.
  for (int e = 0; e < M.n_edges(); ++e) {
    const int d = C.edge_dof(e);
    if (d < 0)
      continue;
    const Edge& E = M.edge(e);
    const int s = S.edge_dof(e);
    if (s >= 0)
      rows[d].emplace_back(s, 1.5);
    for (int v : E.v) {
      const int dv = C.vertex_dof(v, 0);
      if (dv < 0)
        continue;
      add_row(rows[d], rows[dv + 1], -0.25 * E.normal(0));
      add_row(rows[d], rows[dv + 2], -0.25 * E.normal(1));
    }
    compress(rows[d]);
  }

  // Bubbles b^2 P_2: int_T (v - Jv) q = 0 for q in P_2. Rows of different triangles are
  // disjoint, so the loop runs in parallel.
  const int degree = 10;
  const Tabulation& ts = S.tabulation(degree, true);
  const Tabulation& tc = C.tabulation(degree, true);
  const int nq = ts.n_points();
  const int ns = S.n_local(), nc = C.n_local();
  parallel_for(M.n_triangles(), [&](int begin, int end, int) {
    std::vector<Jet> js, jc;
    for (int t = begin; t < end; ++t) {
      S.basis_jets(t, ts, js);
      C.basis_jets(t, tc, jc);
      DenseMatrix Rs = DenseMatrix::Zero(6, ns), Rw = DenseMatrix::Zero(6, 12),
                  Mb = DenseMatrix::Zero(6, 6);
      for (int q = 0; q < nq; ++q) {
        const Vec2& xi = ts.ref_points[q];
        const double l[3] = {1.0 - xi(0) - xi(1), xi(0), xi(1)};
        const double test[6] = {l[0] * l[0], l[1] * l[1], l[2] * l[2],
                                l[0] * l[1], l[1] * l[2], l[2] * l[0]};
        const double w = ts.weights[q];
        for (int r = 0; r < 6; ++r) {
          const double wt = w * test[r];
          for (int i = 0; i < ns; ++i)
            Rs(r, i) += wt * js[q * ns + i].value;
          for (int j = 0; j < 12; ++j)
            Rw(r, j) += wt * jc[q * nc + j].value;
          for (int j = 0; j < 6; ++j)
            Mb(r, j) += wt * jc[q * nc + 12 + j].value;
        }
      }
      const auto lu = Mb.partialPivLu();
      const DenseMatrix As = lu.solve(Rs), Aw = lu.solve(Rw);
      const auto src = S.local_dofs(t);
      const auto tgt = C.local_dofs(t);
      for (int r = 0; r < 6; ++r) {
        SparseRow& row = rows[tgt[12 + r]];
        for (int i = 0; i < ns; ++i)
          if (src[i] >= 0)
            row.emplace_back(src[i], As(r, i));
        for (int j = 0; j < 12; ++j)
          if (tgt[j] >= 0)
            add_row(row, rows[tgt[j]], -Aw(r, j));
        compress(row);
      }
    }
  });
  return {source, target, rows_to_matrix(rows, S.n_dofs())};
}

} // namespace

JetField as_field(const FeFunction& f)
{
  auto ev = std::make_shared<const FunctionEvaluator>(f);
  return [ev](int t, const Vec2& x) { return (*ev)(t, x); };
}

FeFunction interpolate(SpacePtr space, const JetField& v, int edge_degree)
{
  FeFunction out(space);
  for (const auto& f : dof_functionals(*space, edge_degree)) {
    double s = 0.0;
    for (std::size_t q = 0; q < f.x.size(); ++q) {
      const Jet j = v(f.t, f.x[q]);
      s += f.w[q] * (f.normal ? j.grad.dot(f.n) : j.value);
    }
    out.coeffs(f.dof) = s;
  }
  return out;
}

SparseMatrix interpolation_matrix(const FeSpace& nc, const FeSpace& conforming)
{
  if (&nc.mesh() != &conforming.mesh())
    throw Error("interpolation_matrix: spaces live on different meshes");
  // Conforming finite element functions are piecewise polynomials of degree <= 8.
  const auto funcs = dof_functionals(nc, conforming.reference().max_degree);
  std::vector<Eigen::Triplet<double>> trip;
  std::vector<Jet> phi;
  for (const auto& f : funcs) {
    const auto dofs = conforming.local_dofs(f.t);
    std::vector<double> row(dofs.size(), 0.0);
    for (std::size_t q = 0; q < f.x.size(); ++q) {
      conforming.basis_jets(f.t, f.x[q], phi);
      for (std::size_t i = 0; i < dofs.size(); ++i)
        row[i] += f.w[q] * (f.normal ? phi[i].grad.dot(f.n) : phi[i].value);
    }
    for (std::size_t i = 0; i < dofs.size(); ++i)
      if (dofs[i] >= 0 && row[i] != 0.0)
        trip.emplace_back(f.dof, dofs[i], row[i]);
  }
  SparseMatrix P(nc.n_dofs(), conforming.n_dofs());
  P.setFromTriplets(trip.begin(), trip.end());
  return P;
}

double best_approx_orthogonality_check(SpacePtr nc, const FeFunction& v)
{
  const FeSpace& V = *v.space;
  if (nc->m() != V.m())
    throw Error("best_approx_orthogonality_check: order mismatch");
  const FeFunction Iv(nc, interpolation_matrix(*nc, V) * v.coeffs);
  const int m = V.m();
  const int ts = tensor_size(m);
  const Triangulation& M = V.mesh();
  const int degree = std::max(0, V.reference().max_degree - m);
  const bool split = V.reference().split;
  const Tabulation& tv = V.tabulation(degree, split);
  const Tabulation& tn = nc->tabulation(degree, split);
  // D^m of the P_m basis monomials (constant): x, y or x^2, xy, y^2.
  std::vector<DerivTensor> basis;
  if (m == 1)
    basis = {{1, 0, 0, 0}, {0, 1, 0, 0}};
  else
    basis = {{2, 0, 0, 0}, {0, 1, 1, 0}, {0, 0, 0, 2}};
  double worst = 0.0;
  std::vector<Jet> jv, jn;
  for (int t = 0; t < M.n_triangles(); ++t) {
    V.basis_jets(t, tv, jv);
    nc->basis_jets(t, tn, jn);
    const Vector cv = v.local_coeffs(t), cn = Iv.local_coeffs(t);
    const double area = M.area(t);
    DerivTensor integral{};
    for (int q = 0; q < tv.n_points(); ++q) {
      Jet d;
      for (int i = 0; i < V.n_local(); ++i)
        d.axpy(cv(i), jv[q * V.n_local() + i]);
      for (int i = 0; i < nc->n_local(); ++i)
        d.axpy(-cn(i), jn[q * nc->n_local() + i]);
      const DerivTensor D = d.deriv(m);
      for (int k = 0; k < ts; ++k)
        integral[k] += tv.weights[q] * area * D[k];
    }
    for (const auto& b : basis)
      worst = std::max(worst, std::abs(contract(integral, b, m)));
  }
  return worst;
}

CompanionMap build_companion(SpacePtr source)
{
  if (is_companion(source->kind()))
    throw Error("build_companion: source must be a CR or Morley space");
  return source->m() == 1 ? build_cr_companion(std::move(source))
                          : build_morley_companion(std::move(source));
}

FeFunction companion(const CompanionMap& map, const FeFunction& v)
{
  if (v.space != map.source && (v.space->kind() != map.source->kind() ||
                                v.coeffs.size() != map.source->n_dofs()))
    throw Error("companion: function does not live in the source space");
  if (v.coeffs.size() != map.T.cols())
    throw Error("companion: dimension mismatch");
  return FeFunction(map.target, map.T * v.coeffs);
}

Lambda0Result compute_lambda0(const CompanionMap& map, const EigenOptions& opt)
{
  const SparseMatrix A = assemble_stiffness(*map.source);
  const SparseMatrix K = assemble_stiffness(*map.target);
  const SparseMatrix B = SparseMatrix(map.T.transpose()) * K * map.T;
  return compute_lambda0(map.source, A, B, opt);
}

Lambda0Result compute_lambda0(SpacePtr space, const SparseMatrix& A, const SparseMatrix& B,
                              const EigenOptions& opt)
{
  if (space->n_dofs() == 0)
    throw Error("compute_lambda0: the space has no degrees of freedom");
  const EigenResult e = max_generalized_eig(B, A, opt);
  Lambda0Result r;
  r.lambda_max = e.lambda;
  r.lambda0 = std::sqrt(std::max(e.lambda - 1.0, 0.0));
  r.c_qo = std::sqrt(1.0 + r.lambda0 * r.lambda0);
  r.extremal = FeFunction(space, e.x);
  r.dim = space->n_dofs();
  r.residual = e.residual;
  r.iterations = e.iterations;
  r.method = e.method;
  return r;
}

double bessel_j1(double x)
{
  if (std::abs(x) > 20.0)
    throw Error("bessel_j1: series evaluation limited to |x| <= 20");
  // J_1(x) = sum_k (-1)^k (x/2)^(2k+1) / (k! (k+1)!)
  const double h = 0.5 * x;
  double term = h, sum = h;
  for (int k = 1; k < 80; ++k) {
    term *= -h * h / (static_cast<double>(k) * (k + 1));
    sum += term;
    if (std::abs(term) < 1e-18 * std::abs(sum))
      break;
  }
  return sum;
}

double bessel_j1_first_root()
{
  double a = 3.0, b = 4.5; // J_1(3) > 0 > J_1(4.5)
  double fa = bessel_j1(a);
  if (!(fa > 0.0 && bessel_j1(b) < 0.0))
    throw Error("bessel_j1_first_root: bracket lost");
  while (b - a > 1e-14) {
    const double c = 0.5 * (a + b);
    const double fc = bessel_j1(c);
    if ((fc > 0.0) == (fa > 0.0)) {
      a = c;
      fa = fc;
    } else {
      b = c;
    }
  }
  return 0.5 * (a + b);
}

double kappa_constant(int m)
{
  if (m == 1) {
    const double j = bessel_j1_first_root();
    return std::sqrt(1.0 / (j * j) + 1.0 / 48.0);
  }
  if (m == 2)
    return 0.25745784465;
  throw Error("kappa_constant: unsupported m = " + std::to_string(m));
}

} // namespace ncfem
