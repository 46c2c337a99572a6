#pragma once

#include <array>
#include <vector>

namespace ncfem {

constexpr int max_triangle_degree = 16;

// Weights sum to 1; multiply by |T| (or |E|) for physical integrals.
struct TriangleRule {
  std::vector<std::array<double, 3>> points; // barycentric coordinates
  std::vector<double> weights;
  int degree = 0;
  int size() const { return static_cast<int>(weights.size()); }
};

struct EdgeRule {
  std::vector<double> points; // parameter t in [0,1] along the edge
  std::vector<double> weights;
  int degree = 0;
  int size() const { return static_cast<int>(weights.size()); }
};

// Collapsed (Duffy) product of Gauss-Legendre rules; exact for total degree <= degree.
// Throws ncfem::Error for degree outside [0, 16].
const TriangleRule& triangle_rule(int degree);

// Gauss-Legendre on [0,1], exact for degree <= `degree` (any degree >= 0).
const EdgeRule& edge_rule(int degree);

// n-point Gauss-Legendre nodes and weights on [0,1].
void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights);

} // namespace ncfem
