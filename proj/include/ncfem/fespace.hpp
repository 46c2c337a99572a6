#pragma once

#include "ncfem/element.hpp"
#include "ncfem/mesh.hpp"

#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <vector>

namespace ncfem {

enum class SpaceKind {
  CR1_0,
  CR1_full,
  MORLEY_0,
  MORLEY_full,
  COMPANION_CR_0,
  COMPANION_CR_full,
  COMPANION_MORLEY_0,
  COMPANION_MORLEY_full,
};

std::string to_string(SpaceKind kind);
SpaceKind space_kind_from_string(const std::string& name);
bool is_companion(SpaceKind kind);
bool is_homogeneous(SpaceKind kind);
int order_m(SpaceKind kind);
// Conforming companion kind with the same boundary treatment.
SpaceKind companion_kind(SpaceKind nonconforming);
// Nonconforming kind of order m.
SpaceKind nc_kind(int m, bool homogeneous = true);

// Affine map x = v0 + B * xi from the reference triangle onto triangle t.
struct TriangleGeometry {
  Vec2 v0;
  Mat2 B;
  Mat2 Binv;
  double area = 0.0;
  double diameter = 0.0;

  TriangleGeometry(const Triangulation& mesh, int t);
  Vec2 to_reference(const Vec2& x) const { return Binv * (x - v0); }
  Vec2 to_physical(const Vec2& xi) const { return v0 + B * xi; }
  // Converts derivatives from reference to physical coordinates.
  Jet push_forward(const Jet& ref) const;
};

// Reference basis tabulated at the points of a triangle rule, mapped into each of the
// three Clough-Tocher pieces for split elements or when `split` is requested. Two
// tabulations of equal degree and split flag share their points. Weights sum to 1.
struct Tabulation {
  int degree = 0;
  int n_basis = 0;
  std::vector<Vec2> ref_points;
  std::vector<double> weights;
  std::vector<int> piece;
  std::vector<Jet> jets; // jets[q * n_basis + i]
  int n_points() const { return static_cast<int>(weights.size()); }
};

class FeSpace {
public:
  FeSpace(std::shared_ptr<const Triangulation> mesh, SpaceKind kind);

  SpaceKind kind() const { return kind_; }
  int m() const { return order_m(kind_); }
  const Triangulation& mesh() const { return *mesh_; }
  const std::shared_ptr<const Triangulation>& mesh_ptr() const { return mesh_; }
  const ReferenceElement& reference() const { return *ref_; }

  int n_dofs() const { return n_dofs_; }
  int n_local() const { return ref_->size(); }
  int n_constrained() const { return n_constrained_; }
  // Global dof of each local basis function of t; -1 where eliminated by boundary conditions.
  std::span<const int> local_dofs(int t) const
  {
    return {dof_map_.data() + static_cast<std::size_t>(t) * n_local(),
            static_cast<std::size_t>(n_local())};
  }
  const std::vector<LocalDof>& layout() const { return layout_; }

  // Global dof of a vertex/edge entity component, -1 if eliminated or absent.
  int vertex_dof(int v, int component = 0) const;
  int edge_dof(int e) const;

  // Physical basis phi_i = sum_j C(j,i) psi_j o F^{-1}; identity for affine-invariant kinds.
  bool has_transform() const;
  DenseMatrix local_transform(int t) const;

  // Physical basis jets at a physical point inside t (throws if outside).
  void basis_jets(int t, const Vec2& x, std::vector<Jet>& out) const;
  // Physical basis jets at all points of a tabulation: out[q * n_local + i].
  void basis_jets(int t, const Tabulation& tab, std::vector<Jet>& out) const;

  // Cached tabulation of this space's reference basis for a triangle rule of given degree.
  const Tabulation& tabulation(int degree, bool split = false) const;

private:
  std::shared_ptr<const Triangulation> mesh_;
  SpaceKind kind_;
  const ReferenceElement* ref_;
  std::vector<LocalDof> layout_;
  std::vector<int> dof_map_;
  std::vector<int> vertex_offset_; // first dof of each vertex or -1
  std::vector<int> edge_offset_;
  int n_dofs_ = 0;
  int n_constrained_ = 0;

  mutable std::mutex tab_mutex_;
  mutable std::map<int, std::unique_ptr<Tabulation>> tab_cache_;
};

using SpacePtr = std::shared_ptr<const FeSpace>;

SpacePtr build_space(std::shared_ptr<const Triangulation> mesh, SpaceKind kind);
SpacePtr build_space(const Triangulation& mesh, SpaceKind kind);

Tabulation tabulate(const ReferenceElement& ref, int degree, bool split = false);

struct FeFunction {
  SpacePtr space;
  Vector coeffs;

  FeFunction() = default;
  explicit FeFunction(SpacePtr s) : space(std::move(s)), coeffs(Vector::Zero(space->n_dofs())) {}
  FeFunction(SpacePtr s, Vector c);

  // Coefficients of the local (physical) basis on t, zero for eliminated dofs.
  Vector local_coeffs(int t) const;
};

// Exact evaluation of the local polynomial of f on triangle t at physical point x.
// Throws if x lies outside t (tolerance 1e-12 in barycentric coordinates).
Jet eval(const FeFunction& f, int t, const Vec2& x);

// Local polynomials of f collected once per triangle (and Clough-Tocher piece), so that
// repeated evaluation avoids rebuilding the local basis transform.
class FunctionEvaluator {
public:
  explicit FunctionEvaluator(const FeFunction& f);
  // Same contract as eval(f, t, x) minus the inside-triangle check.
  Jet operator()(int t, const Vec2& x) const;
  const FeSpace& space() const { return *space_; }

private:
  SpacePtr space_;
  std::vector<TriangleGeometry> geometry_;
  std::vector<Poly> pieces_; // n_pieces per triangle
};

// Value at a mesh vertex (m=2 spaces and conforming companions); throws for CR spaces.
double vertex_eval(const FeFunction& f, int vertex);
// mu * f|_{T+}(z) + (1 - mu) * f|_{T-}(z) for z on edge e, with T+ = edge.tri[0]
// (the triangle the global normal points out of). Boundary edges use the single side.
double split_point_eval(const FeFunction& f, int edge, const Vec2& z, double mu);

void save_function(const FeFunction& f, const std::string& path);
std::string function_to_string(const FeFunction& f);
// Reads coefficients and checks kind and size against `space`.
FeFunction function_from_string(SpacePtr space, const std::string& text);
FeFunction load_function(SpacePtr space, const std::string& path);

} // namespace ncfem
