#include "ncfem/estimator.hpp"

#include <cmath>

namespace ncfem {

std::string to_string(Scheme s) { return s == Scheme::original ? "original" : "modified"; }

namespace {

EstimateReport common_terms(const CompanionMap& map, const RhsData& data, const FeFunction& u_nc,
                            const EstimatorOptions& opt, Scheme scheme)
{
  data.validate();
  if (!data.point_forces.empty())
    throw Error("estimator: point forces are not covered by the a posteriori bounds");
  const FeSpace& V = *map.source;
  if (u_nc.space->kind() != V.kind() || u_nc.coeffs.size() != V.n_dofs())
    throw Error("estimator: u_nc does not live in the companion source space");
  const Triangulation& M = V.mesh();
  const int m = V.m();

  EstimateReport r;
  r.scheme = scheme;
  r.m = m;
  const SparseMatrix A = assemble_stiffness(V);
  const Vector b_org = assemble_rhs_original(V, data);
  const Vector b_conf = assemble_rhs_original(*map.target, data);
  const Vector b = scheme == Scheme::original ? b_org : Vector(map.T.transpose() * b_conf);
  r.solve_residual = backward_error(A, u_nc.coeffs, b);
  if (!(r.solve_residual <= opt.residual_tol))
    throw Error("estimator: u_nc does not solve the " + to_string(scheme) +
                " scheme (backward error " + std::to_string(r.solve_residual) + ")");

  const FeFunction Ju = companion(map, u_nc);
  r.terms.G_osc = tensor_oscillation(data.G, data.G_degree, m, M, data.G_split);
  r.terms.g_weighted = weighted_norm(data.g, data.g_degree, m, M, opt.h_convention);
  r.terms.g_osc = oscillation(data.g, data.g_degree, m, M, opt.h_convention);
  r.terms.nonconf = energy_pw_diff(u_nc, Ju);
  r.terms.Fhat_correction = b_org.dot(u_nc.coeffs) - b_conf.dot(Ju.coeffs);
  r.constants.kappa = kappa_constant(m);
  return r;
}

} // namespace

bool EstimateReport::reliable(double slack) const
{
  if (!measured)
    return true;
  return measured->lhs_a <= bound_a * (1.0 + slack) && measured->lhs_b <= bound_b * (1.0 + slack);
}

EstimateReport estimate_original(const CompanionMap& map, const RhsData& data, const FeFunction& u_nc,
                                 const EstimatorOptions& opt)
{
  EstimateReport r = common_terms(map, data, u_nc, opt, Scheme::original);
  const auto& t = r.terms;
  const double s = t.G_osc + r.constants.kappa * t.g_weighted + t.nonconf;
  r.bound_a = s * s;
  // The signed correction can lower the bound but never below the (nonnegative) error.
  r.bound_b = s * s + 2.0 * t.Fhat_correction;
  return r;
}

EstimateReport estimate_modified(const CompanionMap& map, const RhsData& data, const FeFunction& u_nc,
                                 const EstimatorOptions& opt)
{
  EstimateReport r = common_terms(map, data, u_nc, opt, Scheme::modified);
  auto& c = r.constants;
  c.lambda0 = opt.lambda0 >= 0.0 ? opt.lambda0 : compute_lambda0(map, opt.eigen).lambda0;
  if (opt.lambda_J >= 0.0) {
    c.lambda_J = opt.lambda_J;
  } else {
    c.lambda_J = c.lambda0;
    c.lambda_J_surrogate = true;
    r.flags.push_back("Lambda_J~Lambda_0 (lower bound surrogate)");
  }
  auto& t = r.terms;
  const double k = c.kappa;
  const double a = k * t.g_weighted + t.nonconf;
  r.bound_a = std::sqrt(1.0 + c.lambda0 * c.lambda0) * t.G_osc +
              std::sqrt(a * a + k * k * c.lambda0 * c.lambda0 * t.g_osc * t.g_osc);
  t.apx_F = (1.0 + c.lambda_J) * t.G_osc + k * t.g_weighted + k * c.lambda_J * t.g_osc;
  r.bound_b = std::sqrt(2.0 * (t.nonconf * t.nonconf + t.apx_F * t.apx_F));
  return r;
}

void measure_errors(EstimateReport& report, const CompanionMap& map, const FeFunction& u_nc,
                    const JetField& u, int u_degree)
{
  MeasuredErrors e;
  const FeFunction Ju = companion(map, u_nc);
  e.energy_conf = error_norms(Ju, u, u_degree).energy_pw;
  e.energy_pw = error_norms(u_nc, u, u_degree).energy_pw;
  const FeFunction Iu = interpolate(map.source, u);
  e.interp_error = energy_pw_diff(Iu, u_nc);
  if (report.scheme == Scheme::original) {
    e.lhs_a = e.energy_conf * e.energy_conf + e.interp_error * e.interp_error;
    e.lhs_b = e.energy_pw * e.energy_pw + e.interp_error * e.interp_error;
  } else {
    e.lhs_a = e.energy_conf;
    e.lhs_b = e.energy_pw;
  }
  report.measured = e;
}

double EfficiencyTerms::index() const
{
  if (lhs == 0.0)
    return 0.0;
  return lhs / (interp_error + g_osc + G_osc);
}

EfficiencyTerms efficiency_terms(SpacePtr space, const RhsData& data, const JetField& u,
                                 int u_degree, HConvention convention)
{
  const Triangulation& M = space->mesh();
  const int m = space->m();
  EfficiencyTerms e;
  e.lhs = weighted_norm(data.g, data.g_degree, m, M, convention);
  e.interp_error = error_norms(interpolate(space, u), u, u_degree).energy_pw;
  e.g_osc = oscillation(data.g, data.g_degree, m, M, convention);
  e.G_osc = tensor_oscillation(data.G, data.G_degree, m, M, data.G_split);
  return e;
}

} // namespace ncfem
