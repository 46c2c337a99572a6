#pragma once

#include "ncfem/estimator.hpp"

#include <array>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace ncfem {

using MeshPtr = std::shared_ptr<const Triangulation>;

// "square:<n>", "lshape:<n>" or "file:<path>".
MeshPtr make_mesh(const std::string& spec);

// One asserted identity or bound.
struct Check {
  std::string name;
  double value = 0.0;
  double expected = 0.0;
  double tol = 0.0;
  std::string relation; // "rel", "abs", "le", "ge"
  bool passed = false;
};

// |value - expected| <= tol * |expected| (absolute when expected = 0).
Check check_rel(std::string name, double value, double expected, double tol);
Check check_abs(std::string name, double value, double expected, double tol);
Check check_le(std::string name, double value, double bound);
Check check_ge(std::string name, double value, double bound);

struct ExperimentReport {
  std::string id;
  int m = 0;
  std::string mesh;
  std::uint64_t seed = 0;
  int n_dofs = 0;
  std::vector<std::pair<std::string, double>> values; // in insertion order
  std::vector<Check> checks;
  std::vector<std::string> notes;
  std::vector<EstimateReport> estimates;

  void set(const std::string& key, double v);
  double get(const std::string& key) const;
  bool passed() const;
};

struct VerifyOptions {
  std::uint64_t seed = 1;
  int samples = 50;             // random v_nc for the right inverse, moments and conformity
  int kappa_samples = 200;      // random conforming functions for the interpolation estimate
  int quotient_samples = 10000; // random directions in the direct search for Lambda0
  int quotient_dof_cap = 100;   // the search runs (and is asserted) only up to this size
  EigenOptions eigen;
};

// Invariants of I_nc and J on one mesh: right inverse, P_m moments of v - Jv, conformity of
// Jv, the interpolation estimate with kappa_m, and Lambda0 against a direct maximization
// of |||v - Jv||| / |||v||| that does not use the eigensolver.
ExperimentReport run_verify(const MeshPtr& mesh, int m, const VerifyOptions& opt = {},
                            const std::string& mesh_id = "");

// Identities for the extremal eigenvector of B x = lambda A x.
ExperimentReport run_attainment(const MeshPtr& mesh, int m, const std::string& mesh_id = "",
                                const EigenOptions& eig = {});
ExperimentReport run_scheme_comparison(const MeshPtr& mesh, int m, const std::string& mesh_id = "",
                                       const EigenOptions& eig = {});
// Data G orthogonal to the conforming derivatives with an order-one natural discrete solution.
ExperimentReport run_counterexample_cr(const MeshPtr& mesh, const std::string& mesh_id = "");
ExperimentReport run_counterexample_morley(const MeshPtr& mesh, const std::string& mesh_id = "");

struct OscillationOptions {
  std::uint64_t seed = 1;
  double target_osc = 1.0;  // bubble amplitude scaled to this ||G - Pi_0 G||; 0 drops the bubbles
  double osc_threshold = 0.1;
  double bound_threshold = 0.01;
};
ExperimentReport run_oscillation_example(const MeshPtr& mesh, const OscillationOptions& opt = {},
                                         const std::string& mesh_id = "");

// Manufactured and reference problems for rate studies.
struct Problem {
  std::string id;
  int m = 1;
  std::string domain;   // "square" or "lshape"
  RhsData data;
  JetField exact;       // empty: fine-grid reference
  double sigma = 1.0;   // elliptic regularity index, NaN when unknown
};

// square-smooth-m1, square-smooth-m2, lshape-singular-m1, lshape-f1-m2, lshape-pointforce-m2,
// square-zero-m1, square-zero-m2.
Problem make_problem(const std::string& id);
// The problem's data with point forces located on the given mesh.
RhsData problem_data(const Problem& p, const Triangulation& mesh);
std::vector<std::string> problem_ids();

// Smooth cutoff: 1 for r <= 1/4, 0 for r >= 3/4, C^3 septic transition; value and two
// derivatives in r.
std::array<double, 3> cutoff(double r);

struct RateOptions {
  int n0 = 2;                 // base mesh parameter
  int levels = 4;             // number of meshes, each a red refinement of the previous
  int fine_levels = 2;        // extra refinements of the fine-grid reference
  bool estimate = false;      // estimator bounds and efficiency terms per level
  int lambda0_dof_cap = 3000; // modified-scheme bounds only up to this size
  long dof_cap = 400000;      // guard on the largest discrete problem
};

struct RateRow {
  int level = 0;
  int ndof = 0;
  double hmax = 0.0;
  std::vector<double> values; // one per column, NaN when not computed
};

struct RateTable {
  std::string problem;
  int m = 1;
  double sigma = 1.0;
  std::vector<std::string> columns;
  std::vector<bool> rated; // error columns get rates
  std::vector<RateRow> rows;
  std::map<std::string, RateFit> fits;
  std::map<std::string, double> expected_rates;
  std::vector<std::string> notes;

  int column(const std::string& name) const; // -1 when absent
  std::vector<double> series(const std::string& name) const;
};

RateTable run_rate_study(const Problem& problem, const RateOptions& opt = {});

// Expected rate t = min(2 sigma, m + sigma - s) of ||u - J u_nc||_{H^s}.
double expected_rate(int m, double sigma, int s);

} // namespace ncfem
