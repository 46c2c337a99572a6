#pragma once

#include "ncfem/assembly.hpp"
#include "ncfem/norms.hpp"

#include <optional>
#include <string>
#include <vector>

namespace ncfem {

enum class Scheme { original, modified };
std::string to_string(Scheme s);

struct EstimatorTerms {
  double G_osc = 0.0;           // ||G - Pi_0 G||
  double g_weighted = 0.0;      // ||h^m g||
  double g_osc = 0.0;           // osc_m(g)
  double nonconf = 0.0;         // |||u_nc - J u_nc|||_pw
  double Fhat_correction = 0.0; // F^(u_nc - J u_nc), signed
  double apx_F = 0.0;
};

struct EstimatorConstants {
  double kappa = 0.0;
  double lambda0 = 0.0;
  double lambda_J = 0.0;
  bool lambda_J_surrogate = false; // lambda_J taken as lambda0
};

struct MeasuredErrors {
  double energy_conf = 0.0;   // |||u - J u_nc|||
  double energy_pw = 0.0;     // |||u - u_nc|||_pw
  double interp_error = 0.0;  // |||I_nc u - u_nc|||_pw
  // Left-hand sides compared with bound_a and bound_b.
  double lhs_a = 0.0;
  double lhs_b = 0.0;
};

// original scheme: bound_a bounds |||u - J u_nc|||^2 + |||I u - u_nc|||^2 and bound_b bounds
// |||u - u_nc|||^2 + |||I u - u_nc|||^2 (squared quantities).
// modified scheme: bound_a bounds |||u - J u_nc||| and bound_b bounds |||u - u_nc|||_pw.
struct EstimateReport {
  Scheme scheme = Scheme::original;
  int m = 1;
  EstimatorTerms terms;
  EstimatorConstants constants;
  double bound_a = 0.0;
  double bound_b = 0.0;
  double solve_residual = 0.0; // backward error of u_nc in its own scheme
  std::optional<MeasuredErrors> measured;
  std::vector<std::string> flags;

  // Measured left-hand sides within the bounds up to a relative slack.
  bool reliable(double slack = 1e-6) const;
};

struct EstimatorOptions {
  HConvention h_convention = HConvention::diameter;
  double lambda0 = -1.0;      // computed with compute_lambda0 when negative
  double lambda_J = -1.0;     // lambda0 when negative (flagged surrogate)
  double residual_tol = 1e-9; // on the backward error of the discrete solve
  EigenOptions eigen;
};

// Bounds for u_nc solving the original scheme; throws if u_nc fails the residual check
// or the data contain point forces.
EstimateReport estimate_original(const CompanionMap& map, const RhsData& data, const FeFunction& u_nc,
                                 const EstimatorOptions& opt = {});
EstimateReport estimate_modified(const CompanionMap& map, const RhsData& data, const FeFunction& u_nc,
                                 const EstimatorOptions& opt = {});

// Fills report.measured from a reference solution with jets (degree hint as in error_norms).
void measure_errors(EstimateReport& report, const CompanionMap& map, const FeFunction& u_nc,
                    const JetField& u, int u_degree);

struct EfficiencyTerms {
  double lhs = 0.0;          // ||h^m g||
  double interp_error = 0.0; // |||u - I_nc u|||_pw
  double g_osc = 0.0;
  double G_osc = 0.0;
  double index() const;      // lhs / (interp_error + g_osc + G_osc), 0 when lhs = 0
};

EfficiencyTerms efficiency_terms(SpacePtr space, const RhsData& data, const JetField& u,
                                 int u_degree, HConvention convention = HConvention::diameter);

} // namespace ncfem
