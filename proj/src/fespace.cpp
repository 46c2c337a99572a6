#include "ncfem/fespace.hpp"

#include "ncfem/parallel.hpp"
#include "ncfem/quadrature.hpp"

#include <Eigen/LU>

#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

namespace ncfem {

namespace {

struct KindInfo {
  SpaceKind kind;
  const char* name;
  int m;
  bool homogeneous;
  bool companion;
};

constexpr KindInfo kinds[] = {
    {SpaceKind::CR1_0, "CR1_0", 1, true, false},
    {SpaceKind::CR1_full, "CR1_full", 1, false, false},
    {SpaceKind::MORLEY_0, "MORLEY_0", 2, true, false},
    {SpaceKind::MORLEY_full, "MORLEY_full", 2, false, false},
    {SpaceKind::COMPANION_CR_0, "COMPANION_CR_0", 1, true, true},
    {SpaceKind::COMPANION_CR_full, "COMPANION_CR_full", 1, false, true},
    {SpaceKind::COMPANION_MORLEY_0, "COMPANION_MORLEY_0", 2, true, true},
    {SpaceKind::COMPANION_MORLEY_full, "COMPANION_MORLEY_full", 2, false, true},
};

const KindInfo& info(SpaceKind k)
{
  for (const auto& i : kinds)
    if (i.kind == k)
      return i;
  throw Error("unknown space kind");
}

bool is_morley_family(SpaceKind k)
{
  return k == SpaceKind::MORLEY_0 || k == SpaceKind::MORLEY_full;
}

} // namespace

std::string to_string(SpaceKind kind) { return info(kind).name; }

SpaceKind space_kind_from_string(const std::string& name)
{
  for (const auto& i : kinds)
    if (name == i.name)
      return i.kind;
  throw Error("unknown space kind '" + name + "'");
}

bool is_companion(SpaceKind kind) { return info(kind).companion; }
bool is_homogeneous(SpaceKind kind) { return info(kind).homogeneous; }
int order_m(SpaceKind kind) { return info(kind).m; }

SpaceKind companion_kind(SpaceKind k)
{
  switch (k) {
  case SpaceKind::CR1_0: return SpaceKind::COMPANION_CR_0;
  case SpaceKind::CR1_full: return SpaceKind::COMPANION_CR_full;
  case SpaceKind::MORLEY_0: return SpaceKind::COMPANION_MORLEY_0;
  case SpaceKind::MORLEY_full: return SpaceKind::COMPANION_MORLEY_full;
  default: throw Error("companion_kind: " + to_string(k) + " is not a nonconforming kind");
  }
}

SpaceKind nc_kind(int m, bool homogeneous)
{
  if (m == 1)
    return homogeneous ? SpaceKind::CR1_0 : SpaceKind::CR1_full;
  if (m == 2)
    return homogeneous ? SpaceKind::MORLEY_0 : SpaceKind::MORLEY_full;
  throw Error("unsupported m = " + std::to_string(m));
}

//----------------------------------------------------------------------------

TriangleGeometry::TriangleGeometry(const Triangulation& mesh, int t)
{
  const auto& tri = mesh.triangle(t);
  v0 = mesh.vertex(tri[0]);
  B.col(0) = mesh.vertex(tri[1]) - v0;
  B.col(1) = mesh.vertex(tri[2]) - v0;
  Binv = B.inverse();
  area = 0.5 * B.determinant();
  diameter = mesh.diameter(t);
}

Jet TriangleGeometry::push_forward(const Jet& r) const
{
  Jet p;
  p.value = r.value;
  p.grad = Binv.transpose() * r.grad;
  p.hess = Binv.transpose() * r.hess * Binv;
  return p;
}

Tabulation tabulate(const ReferenceElement& ref, int degree, bool split)
{
  const TriangleRule& rule = triangle_rule(degree);
  Tabulation tab;
  tab.degree = degree;
  tab.n_basis = ref.size();
  split = split || ref.split;
  const int np = split ? 3 : 1;
  for (int p = 0; p < np; ++p)
    for (int q = 0; q < rule.size(); ++q) {
      const auto& mu = rule.points[q];
      const Vec2 x = split ? piece_point(p, mu) : Vec2(mu[1], mu[2]);
      const int piece = ref.split ? p : 0;
      tab.ref_points.push_back(x);
      tab.weights.push_back(rule.weights[q] / np);
      tab.piece.push_back(piece);
      for (int i = 0; i < ref.size(); ++i)
        tab.jets.push_back(ref.basis[i][piece].jet(x(0), x(1)));
    }
  return tab;
}

//----------------------------------------------------------------------------

FeSpace::FeSpace(std::shared_ptr<const Triangulation> mesh, SpaceKind kind)
    : mesh_(std::move(mesh)), kind_(kind)
{
  const Triangulation& M = *mesh_;
  int per_vertex = 0, per_cell = 0;
  switch (kind) {
  case SpaceKind::CR1_0:
  case SpaceKind::CR1_full:
    ref_ = &cr_reference();
    for (int k = 0; k < 3; ++k)
      layout_.push_back({DofEntity::edge, k, 0});
    break;
  case SpaceKind::MORLEY_0:
  case SpaceKind::MORLEY_full:
    ref_ = &morley_reference();
    per_vertex = 1;
    for (int k = 0; k < 3; ++k)
      layout_.push_back({DofEntity::vertex, k, 0});
    for (int k = 0; k < 3; ++k)
      layout_.push_back({DofEntity::edge, k, 0});
    break;
  case SpaceKind::COMPANION_CR_0:
  case SpaceKind::COMPANION_CR_full:
    ref_ = &companion_cr_reference();
    per_vertex = 1;
    per_cell = 3;
    for (int k = 0; k < 3; ++k)
      layout_.push_back({DofEntity::vertex, k, 0});
    for (int k = 0; k < 3; ++k)
      layout_.push_back({DofEntity::edge, k, 0});
    for (int c = 0; c < 3; ++c)
      layout_.push_back({DofEntity::cell, 0, c});
    break;
  case SpaceKind::COMPANION_MORLEY_0:
  case SpaceKind::COMPANION_MORLEY_full:
    ref_ = &companion_morley_reference();
    per_vertex = 3;
    per_cell = 6;
    for (int k = 0; k < 3; ++k)
      layout_.push_back({DofEntity::vertex, k, 0});
    for (int k = 0; k < 3; ++k)
      for (int c = 1; c <= 2; ++c)
        layout_.push_back({DofEntity::vertex, k, c});
    for (int k = 0; k < 3; ++k)
      layout_.push_back({DofEntity::edge, k, 0});
    for (int c = 0; c < 6; ++c)
      layout_.push_back({DofEntity::cell, 0, c});
    break;
  }

  const bool hom = is_homogeneous(kind);
  int next = 0;
  vertex_offset_.assign(M.n_vertices(), -1);
  if (per_vertex > 0)
    for (int v = 0; v < M.n_vertices(); ++v) {
      if (hom && M.is_boundary_vertex(v)) {
        n_constrained_ += per_vertex;
        continue;
      }
      vertex_offset_[v] = next;
      next += per_vertex;
    }
  edge_offset_.assign(M.n_edges(), -1);
  for (int e = 0; e < M.n_edges(); ++e) {
    if (hom && M.edge(e).boundary) {
      ++n_constrained_;
      continue;
    }
    edge_offset_[e] = next++;
  }
  const int cell_offset = next;
  next += per_cell * M.n_triangles();
  n_dofs_ = next;

  const int nl = n_local();
  dof_map_.assign(static_cast<std::size_t>(M.n_triangles()) * nl, -1);
  for (int t = 0; t < M.n_triangles(); ++t)
    for (int i = 0; i < nl; ++i) {
      const LocalDof& d = layout_[i];
      int g = -1;
      if (d.entity == DofEntity::vertex) {
        const int off = vertex_offset_[M.triangle(t)[d.index]];
        g = off < 0 ? -1 : off + d.component;
      } else if (d.entity == DofEntity::edge) {
        g = edge_offset_[M.triangle_edge(t, d.index)];
      } else {
        g = cell_offset + per_cell * t + d.component;
      }
      dof_map_[static_cast<std::size_t>(t) * nl + i] = g;
    }
}

int FeSpace::vertex_dof(int v, int component) const
{
  const int off = vertex_offset_[v];
  return off < 0 ? -1 : off + component;
}

int FeSpace::edge_dof(int e) const { return edge_offset_[e]; }

bool FeSpace::has_transform() const
{
  return is_morley_family(kind_) || kind_ == SpaceKind::COMPANION_MORLEY_0 ||
         kind_ == SpaceKind::COMPANION_MORLEY_full;
}

DenseMatrix FeSpace::local_transform(int t) const
{
  const int nl = n_local();
  if (!has_transform())
    return DenseMatrix::Identity(nl, nl);

  const Triangulation& M = *mesh_;
  const TriangleGeometry g(M, t);
  const Vec2 ref_vertex[3] = {Vec2(0, 0), Vec2(1, 0), Vec2(0, 1)};
  auto ref_mid = [&](int k) { return 0.5 * (ref_vertex[(k + 1) % 3] + ref_vertex[(k + 2) % 3]); };
  const double h = g.diameter;

  // Rows of D are the physical dofs applied to the reference functions; derivative rows are
  // scaled by h for conditioning and the scaling is undone after inversion.
  const bool morley = is_morley_family(kind_);
  const int nd = morley ? 6 : 12;
  DenseMatrix D(nd, nd);
  Vector scale = Vector::Ones(nd);
  for (int j = 0; j < nd; ++j) {
    const auto& pieces = ref_->basis[j];
    auto jet_at = [&](const Vec2& xi, int piece) {
      return g.push_forward(pieces[morley ? 0 : piece].jet(xi(0), xi(1)));
    };
    for (int k = 0; k < 3; ++k) {
      const Vec2 nu = M.edge(M.triangle_edge(t, k)).normal;
      const Jet jv = jet_at(ref_vertex[k], (k + 1) % 3);
      const Jet jm = jet_at(ref_mid(k), k);
      if (morley) {
        D(k, j) = jv.value;
        D(3 + k, j) = h * jm.grad.dot(nu);
        scale(3 + k) = h;
      } else {
        D(k, j) = jv.value;
        D(3 + 2 * k, j) = h * jv.grad(0);
        D(4 + 2 * k, j) = h * jv.grad(1);
        D(9 + k, j) = h * jm.grad.dot(nu);
        scale(3 + 2 * k) = scale(4 + 2 * k) = scale(9 + k) = h;
      }
    }
  }
  DenseMatrix C = DenseMatrix::Identity(nl, nl);
  C.topLeftCorner(nd, nd) = D.partialPivLu().inverse() * scale.asDiagonal();
  return C;
}

void FeSpace::basis_jets(int t, const Vec2& x, std::vector<Jet>& out) const
{
  const auto lam = barycentric(*mesh_, t, x);
  for (double l : lam)
    if (l < -1e-12 || l > 1.0 + 1e-12)
      throw Error("point (" + std::to_string(x(0)) + ", " + std::to_string(x(1)) +
                  ") lies outside triangle " + std::to_string(t));
  const TriangleGeometry g(*mesh_, t);
  const int piece = locate_piece(ref_->split, lam[1], lam[2]);
  const int nl = n_local();
  std::vector<Jet> ref(nl);
  for (int j = 0; j < nl; ++j)
    ref[j] = g.push_forward(ref_->basis[j][piece].jet(lam[1], lam[2]));
  out.assign(nl, Jet{});
  if (!has_transform()) {
    out = ref;
    return;
  }
  const DenseMatrix C = local_transform(t);
  for (int i = 0; i < nl; ++i)
    for (int j = 0; j < nl; ++j)
      if (C(j, i) != 0.0)
        out[i].axpy(C(j, i), ref[j]);
}

void FeSpace::basis_jets(int t, const Tabulation& tab, std::vector<Jet>& out) const
{
  const TriangleGeometry g(*mesh_, t);
  const int nl = n_local();
  const int nq = tab.n_points();
  out.resize(static_cast<std::size_t>(nq) * nl);
  if (!has_transform()) {
    for (int q = 0; q < nq; ++q)
      for (int i = 0; i < nl; ++i)
        out[q * nl + i] = g.push_forward(tab.jets[q * nl + i]);
    return;
  }
  const DenseMatrix C = local_transform(t);
  std::vector<Jet> ref(nl);
  for (int q = 0; q < nq; ++q) {
    for (int j = 0; j < nl; ++j)
      ref[j] = g.push_forward(tab.jets[q * nl + j]);
    for (int i = 0; i < nl; ++i) {
      Jet s;
      for (int j = 0; j < nl; ++j)
        if (C(j, i) != 0.0)
          s.axpy(C(j, i), ref[j]);
      out[q * nl + i] = s;
    }
  }
}

const Tabulation& FeSpace::tabulation(int degree, bool split) const
{
  std::lock_guard lock(tab_mutex_);
  auto& slot = tab_cache_[2 * degree + (split ? 1 : 0)];
  if (!slot)
    slot = std::make_unique<Tabulation>(tabulate(*ref_, degree, split));
  return *slot;
}

SpacePtr build_space(std::shared_ptr<const Triangulation> mesh, SpaceKind kind)
{
  return std::make_shared<const FeSpace>(std::move(mesh), kind);
}

SpacePtr build_space(const Triangulation& mesh, SpaceKind kind)
{
  return build_space(std::make_shared<const Triangulation>(mesh), kind);
}

//----------------------------------------------------------------------------

FeFunction::FeFunction(SpacePtr s, Vector c) : space(std::move(s)), coeffs(std::move(c))
{
  if (coeffs.size() != space->n_dofs())
    throw Error("FeFunction: coefficient length " + std::to_string(coeffs.size()) +
                " does not match n_dofs " + std::to_string(space->n_dofs()));
}

Vector FeFunction::local_coeffs(int t) const
{
  const auto dofs = space->local_dofs(t);
  Vector c(dofs.size());
  for (std::size_t i = 0; i < dofs.size(); ++i)
    c(i) = dofs[i] < 0 ? 0.0 : coeffs(dofs[i]);
  return c;
}

Jet eval(const FeFunction& f, int t, const Vec2& x)
{
  std::vector<Jet> phi;
  f.space->basis_jets(t, x, phi);
  const Vector c = f.local_coeffs(t);
  Jet r;
  for (std::size_t i = 0; i < phi.size(); ++i)
    r.axpy(c(i), phi[i]);
  return r;
}

FunctionEvaluator::FunctionEvaluator(const FeFunction& f) : space_(f.space)
{
  const FeSpace& S = *space_;
  const Triangulation& M = S.mesh();
  const ReferenceElement& ref = S.reference();
  const int np = ref.n_pieces();
  geometry_.reserve(M.n_triangles());
  for (int t = 0; t < M.n_triangles(); ++t)
    geometry_.emplace_back(M, t);
  pieces_.assign(static_cast<std::size_t>(M.n_triangles()) * np, Poly(ref.max_degree));
  parallel_for(M.n_triangles(), [&](int begin, int end, int) {
    for (int t = begin; t < end; ++t) {
      // Reference-basis coefficients C * c_local.
      const Vector a = S.local_transform(t) * f.local_coeffs(t);
      for (int p = 0; p < np; ++p) {
        Poly sum(ref.max_degree);
        for (int j = 0; j < ref.size(); ++j)
          if (a(j) != 0.0)
            sum = sum + ref.basis[j][p] * a(j);
        pieces_[static_cast<std::size_t>(t) * np + p] = std::move(sum);
      }
    }
  });
}

Jet FunctionEvaluator::operator()(int t, const Vec2& x) const
{
  const TriangleGeometry& g = geometry_[t];
  const Vec2 xi = g.to_reference(x);
  const ReferenceElement& ref = space_->reference();
  const int p = locate_piece(ref.split, xi(0), xi(1));
  return g.push_forward(pieces_[static_cast<std::size_t>(t) * ref.n_pieces() + p].jet(xi(0), xi(1)));
}

double vertex_eval(const FeFunction& f, int vertex)
{
  if (f.space->m() != 2 && !is_companion(f.space->kind()))
    throw Error("vertex_eval: point values are not defined for " + to_string(f.space->kind()));
  const Triangulation& M = f.space->mesh();
  for (int t = 0; t < M.n_triangles(); ++t)
    for (int k : M.triangle(t))
      if (k == vertex)
        return eval(f, t, M.vertex(vertex)).value;
  throw Error("vertex_eval: vertex out of range");
}

double split_point_eval(const FeFunction& f, int edge, const Vec2& z, double mu)
{
  if (f.space->m() != 2 && !is_companion(f.space->kind()))
    throw Error("split_point_eval: point values are not defined for " +
                to_string(f.space->kind()));
  if (mu < 0.0 || mu > 1.0)
    throw Error("split_point_eval: mu must lie in [0,1]");
  const Edge& E = f.space->mesh().edge(edge);
  const double plus = eval(f, E.tri[0], z).value;
  if (E.boundary)
    return plus;
  return mu * plus + (1.0 - mu) * eval(f, E.tri[1], z).value;
}

std::string function_to_string(const FeFunction& f)
{
  std::ostringstream s;
  s << std::setprecision(std::numeric_limits<double>::max_digits10);
  s << "ncfem-fun v1 " << to_string(f.space->kind()) << ' ' << f.coeffs.size() << '\n';
  for (Eigen::Index i = 0; i < f.coeffs.size(); ++i)
    s << f.coeffs(i) << '\n';
  return s.str();
}

void save_function(const FeFunction& f, const std::string& path)
{
  std::ofstream out(path);
  if (!out)
    throw Error("cannot open " + path + " for writing");
  out << function_to_string(f);
}

FeFunction function_from_string(SpacePtr space, const std::string& text)
{
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line))
    throw ParseError("missing header", 1);
  std::istringstream hs(line);
  std::string magic, version, kind;
  long n = -1;
  if (!(hs >> magic >> version >> kind >> n) || magic != "ncfem-fun" || version != "v1")
    throw ParseError("expected header 'ncfem-fun v1 <kind> <n_dofs>'", 1);
  if (kind != to_string(space->kind()))
    throw Error("function kind " + kind + " does not match space " + to_string(space->kind()));
  if (n != space->n_dofs())
    throw Error("function has " + std::to_string(n) + " coefficients, space has " +
                std::to_string(space->n_dofs()));
  Vector c(n);
  for (long i = 0; i < n; ++i) {
    if (!std::getline(in, line))
      throw ParseError("unexpected end of file", static_cast<int>(i) + 2);
    try {
      std::size_t pos = 0;
      c(i) = std::stod(line, &pos);
      if (line.find_first_not_of(" \t\r", pos) != std::string::npos)
        throw std::invalid_argument(line);
    } catch (const std::exception&) {
      throw ParseError("invalid coefficient '" + line + "'", static_cast<int>(i) + 2);
    }
  }
  return FeFunction(std::move(space), std::move(c));
}

FeFunction load_function(SpacePtr space, const std::string& path)
{
  std::ifstream in(path);
  if (!in)
    throw Error("cannot open " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return function_from_string(std::move(space), buf.str());
}

} // namespace ncfem
