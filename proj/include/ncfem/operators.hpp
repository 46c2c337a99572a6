#pragma once

#include "ncfem/fespace.hpp"
#include "ncfem/linalg.hpp"

#include <functional>
#include <string>

namespace ncfem {

// A function given by its jet at physical points of each triangle.
using JetField = std::function<Jet(int t, const Vec2& x)>;

// Jet field of a finite element function (exact local polynomials, cached per triangle).
JetField as_field(const FeFunction& f);

// I_nc v from vertex values and edge means of v (CR) or of its normal derivative
// (Morley). Edge integrals use the side edge.tri[0] and are exact for degree along
// edges <= edge_degree. Eliminated boundary dofs are skipped.
FeFunction interpolate(SpacePtr space, const JetField& v, int edge_degree = 16);

// Matrix of I_nc on a conforming finite element space over the same mesh:
// coeffs(I_nc v) = P * coeffs(v).
SparseMatrix interpolation_matrix(const FeSpace& nc, const FeSpace& conforming);

// max over triangles T and a basis w of P_m(T) of |a_pw(v - I_nc v, w)| for a
// conforming finite element function v.
double best_approx_orthogonality_check(SpacePtr nc, const FeFunction& v);

// J as a sparse matrix: coeffs(J v) = T * coeffs(v).
struct CompanionMap {
  SpacePtr source;
  SpacePtr target;
  SparseMatrix T;
};

// Companion of a CR or Morley space into the matching COMPANION kind (homogeneous spaces
// zero the boundary dofs, full spaces average there as well).
CompanionMap build_companion(SpacePtr source);
FeFunction companion(const CompanionMap& map, const FeFunction& v);

struct Lambda0Result {
  double lambda0 = 0.0;
  double c_qo = 1.0;
  double lambda_max = 1.0; // of B x = lambda A x
  FeFunction extremal;     // |||v|||_pw = 1
  int dim = 0;
  double residual = 0.0; // ||Bx - lambda Ax|| / ||Ax||
  int iterations = 0;
  std::string method;
};

// A = nonconforming stiffness, B = T^T K_c T.
Lambda0Result compute_lambda0(const CompanionMap& map, const EigenOptions& opt = {});
// Same with caller-supplied matrices; B = A gives lambda0 = 0.
Lambda0Result compute_lambda0(SpacePtr space, const SparseMatrix& A, const SparseMatrix& B,
                              const EigenOptions& opt = {});

// Bessel function of the first kind of order one (power series, |x| <= 20).
double bessel_j1(double x);
// First positive root j_{1,1} by bisection on a sign change of J_1.
double bessel_j1_first_root();
// Interpolation constants: kappa_1 = sqrt(j_{1,1}^-2 + 1/48), kappa_2 = 0.25745784465.
double kappa_constant(int m);

} // namespace ncfem
