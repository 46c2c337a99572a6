#pragma once

#include "ncfem/common.hpp"

#include <vector>

namespace ncfem {

// Bivariate polynomial in reference coordinates (xi, eta), dense monomial coefficients.
class Poly {
public:
  Poly() : Poly(0) {}
  explicit Poly(int degree);

  static Poly constant(double c);
  // Barycentric coordinate k of the reference triangle (0,0), (1,0), (0,1).
  static Poly barycentric(int k);

  int degree() const { return degree_; }
  double coeff(int i, int j) const { return c_[index(i, j)]; }
  double& coeff(int i, int j) { return c_[index(i, j)]; }

  Poly operator+(const Poly& o) const;
  Poly operator-(const Poly& o) const;
  Poly operator*(const Poly& o) const;
  Poly operator*(double s) const;

  double operator()(double x, double y) const { return jet(x, y).value; }
  // Value, gradient and Hessian with respect to (xi, eta).
  Jet jet(double x, double y) const;

  static int index(int i, int j) { return (i + j) * (i + j + 1) / 2 + j; }
  static int size(int degree) { return (degree + 1) * (degree + 2) / 2; }

private:
  int degree_;
  std::vector<double> c_;
};

inline Poly operator*(double s, const Poly& p) { return p * s; }

// Reference triangle with vertices (0,0), (1,0), (0,1). A split element uses the
// Clough-Tocher partition: piece k is the subtriangle (v_{k+1}, v_{k+2}, centroid)
// adjacent to edge k, i.e. where barycentric coordinate k is the smallest.
struct ReferenceElement {
  bool split = false;
  std::vector<std::vector<Poly>> basis; // basis[i][piece]
  int max_degree = 0;

  int size() const { return static_cast<int>(basis.size()); }
  int n_pieces() const { return split ? 3 : 1; }
};

// Piece containing a reference point (0 for unsplit elements).
int locate_piece(bool split, double xi, double eta);

// Reference point of barycentric coordinates mu within piece k of the split.
Vec2 piece_point(int piece, const std::array<double, 3>& mu);

// Which topological entity a local basis function belongs to.
enum class DofEntity { vertex, edge, cell };

struct LocalDof {
  DofEntity entity;
  int index;     // local vertex / edge number, or 0 for cell dofs
  int component; // position among the dofs on that entity
};

const ReferenceElement& cr_reference();
const ReferenceElement& morley_reference();
const ReferenceElement& companion_cr_reference();
// Hsieh-Clough-Tocher space (12 functions) followed by six degree-8 bubbles.
const ReferenceElement& companion_morley_reference();
// The 12-dimensional C^1 piecewise cubic space alone.
const ReferenceElement& hct_reference();

} // namespace ncfem
