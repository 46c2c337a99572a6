#pragma once

#include "ncfem/operators.hpp"

#include <string>
#include <vector>

namespace ncfem {

// Piecewise norms of f - reference: energy_pw = ||D^m_pw .||, l2 = ||.||, h1_pw = ||grad_pw .||.
struct ErrorBundle {
  double energy_pw = 0.0;
  double l2 = 0.0;
  double h1_pw = 0.0;
  double l2_inv_h = 0.0; // ||h_T^(-m) (.)||, diameter convention
  std::string against = "zero";
};

// reference_degree >= 0 declares the reference a polynomial of that degree on each triangle
// (Clough-Tocher piece for split spaces) and makes the result exact; it throws when no rule
// is exact for that degree. smooth_data uses the largest rule.
ErrorBundle error_norms(const FeFunction& f, const JetField& reference, int reference_degree);
ErrorBundle norms(const FeFunction& f);
// a - b for two finite element functions on the same mesh (exact).
ErrorBundle difference_norms(const FeFunction& a, const FeFunction& b);
double energy_pw(const FeFunction& f);
double energy_pw_diff(const FeFunction& a, const FeFunction& b);

// coarse - fine where fine lives on a red refinement of the coarse mesh and ancestor maps
// fine triangles to coarse ones. Exact unless the coarse space is split (the Clough-Tocher
// pieces of a coarse triangle do not align with its children).
ErrorBundle fine_grid_difference(const FeFunction& coarse, const FeFunction& fine,
                                 const std::vector<int>& ancestor);

struct RateFit {
  std::vector<double> rates; // NaN where an error is at or below the floor
  double ls_rate = 0.0;      // slope of the least-squares line through (log h, log e)
  bool below_floor = false;
};

// Throws for fewer than two entries, mismatched lengths or h not strictly decreasing.
RateFit convergence_rate(const std::vector<double>& h, const std::vector<double>& e,
                         double floor = 1e-13);

} // namespace ncfem
