#pragma once

#include "ncfem/fespace.hpp"
#include "ncfem/linalg.hpp"

#include <functional>
#include <vector>

namespace ncfem {

struct CompanionMap;

// Data fields are evaluated at a physical point x inside triangle t. The triangle index
// lets piecewise data (derivatives of finite element functions) pick the right side of
// an interelement edge; quadrature points never lie on element boundaries.
using ScalarField = std::function<double(int t, const Vec2& x)>;
// m=1: (G_1, G_2); m=2: (G_11, G_12, G_21, G_22).
using TensorField = std::function<DerivTensor(int t, const Vec2& x)>;

// Degree hint for non-polynomial data; integrated with a fixed rule of degree >= 12.
constexpr int smooth_data = -1;

struct PointForce {
  Vec2 point = Vec2::Zero();
  double beta = 1.0;
  double mu = 0.5; // weight of the side edge.tri[0] for points inside an edge
  // Resolved location: exactly one of these is >= 0.
  int vertex = -1;
  int edge = -1;
  int triangle = -1;
};

// Point force at p located against the mesh (vertex within 1e-10 * h, else edge, else
// triangle). Throws if p lies outside the mesh.
PointForce locate_point_force(const Triangulation& mesh, const Vec2& p, double beta,
                              double mu = 0.5);

// F(v) = int G : D^m v + int g v + sum beta(a) v(a).
struct RhsData {
  int m = 1;
  TensorField G; // empty means zero
  int G_degree = 0;
  // G is only piecewise polynomial on the Clough-Tocher split (derivatives of a Morley
  // companion); quadrature then runs on the three pieces.
  bool G_split = false;
  ScalarField g; // empty means zero
  int g_degree = 0;
  std::vector<PointForce> point_forces;

  // Throws for point forces with m=1 and mu outside [0,1].
  void validate() const;
};

// Quadrature degree that integrates products of the given polynomial degrees exactly;
// smooth_data on either side yields max(12, ...) capped at the largest rule.
int product_degree(int a, int b);

// Physical points and weights (summing to |T|) of the degree-`degree` rule on triangle t,
// applied on each Clough-Tocher piece when `split` is set. Same point order as tabulate().
void cell_quadrature(const Triangulation& mesh, int t, int degree, bool split,
                     std::vector<Vec2>& points, std::vector<double>& weights);

// K_ij = a_pw(phi_i, phi_j); eliminated dofs are dropped.
SparseMatrix assemble_stiffness(const FeSpace& space);
// M_ij = a_pw(phi_i of a, psi_j of b) for two spaces on the same mesh.
SparseMatrix assemble_mixed_stiffness(const FeSpace& a, const FeSpace& b);
// L2 Gram matrix int phi_i psi_j between two spaces on the same mesh.
SparseMatrix assemble_mass(const FeSpace& a, const FeSpace& b);

// Natural right-hand side: entry i = F^(phi_i) with piecewise derivatives and
// mu-split point evaluation.
Vector assemble_rhs_original(const FeSpace& space, const RhsData& data);
// Entry i = F(J phi_i) = (T^T b_c)_i for the load vector b_c of the companion space.
Vector assemble_rhs_modified(const CompanionMap& map, const RhsData& data);

// Piecewise polynomial of degree k, monomials in (x - c_T) / h_T on each triangle.
struct PiecewisePolynomial {
  int degree = 0;
  std::vector<Vec2> center;
  std::vector<double> scale;
  std::vector<Vector> coeffs;
  double operator()(int t, const Vec2& x) const;
};

PiecewisePolynomial l2_project(const ScalarField& f, int f_degree, int k,
                               const Triangulation& mesh);
// || w (f - Pi_k f) || with piecewise constant weights w (all ones when empty).
double projection_error(const ScalarField& f, int f_degree, int k, const Triangulation& mesh,
                        const std::vector<double>& weights = {});
// osc_m(g) = || h^m (g - Pi_m g) ||.
double oscillation(const ScalarField& g, int g_degree, int m, const Triangulation& mesh,
                   HConvention convention = HConvention::diameter);
// || G - Pi_0 G || over all 2^m components.
double tensor_oscillation(const TensorField& G, int G_degree, int m, const Triangulation& mesh,
                          bool split = false);
// || h^m g ||.
double weighted_norm(const ScalarField& g, int g_degree, int m, const Triangulation& mesh,
                     HConvention convention = HConvention::diameter);

// (G - Q, g + (-1)^m div^m Q, same point forces); div_m_Q is the plain m-th divergence
// (sum_i d_i Q_i, or sum_ij d_i d_j Q_ij). F is unchanged on conforming arguments.
RhsData preprocess_data(const RhsData& data, const TensorField& Q, int Q_degree,
                        const ScalarField& div_m_Q, int div_degree);

} // namespace ncfem
