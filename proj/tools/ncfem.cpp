#include "config.hpp"

#include "ncfem/parallel.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <ctime>
#include <iostream>

using namespace ncfem;
using namespace ncfem::cli;

namespace {

constexpr int exit_ok = 0;
constexpr int exit_usage = 1;
constexpr int exit_failed = 2;

struct Outcome {
  std::string id;
  int m = 1;
  std::string mesh;
  Json body;
  std::vector<Check> checks;
  std::string csv; // rate table only
};

EigenOptions eigen_options(const RunConfig& c)
{
  EigenOptions e;
  e.tol = c.eigen_tol;
  e.dense_limit = c.dense_limit;
  return e;
}

std::string utc_timestamp()
{
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

MeshPtr config_mesh(const RunConfig& c)
{
  try {
    return make_mesh(c.mesh);
  } catch (const Error& e) {
    throw ConfigError(std::string("mesh: ") + e.what());
  }
}

Outcome from_report(const ExperimentReport& r)
{
  return {r.id, r.m, r.mesh, to_json(r), r.checks, {}};
}

bool wants(const RunConfig& c, Scheme s)
{
  return c.scheme == "both" || c.scheme == to_string(s);
}

// solve and estimate: one mesh, builtin problem or inline data.
Outcome run_solve(const RunConfig& c, bool with_estimates)
{
  const MeshPtr mesh = config_mesh(c);
  int m = c.m;
  RhsData data;
  JetField exact;
  if (!c.problem.empty()) {
    const Problem p = make_problem(c.problem);
    if (c.mesh.rfind("file:", 0) != 0 && c.mesh.rfind(p.domain + ":", 0) != 0)
      throw ConfigError("mesh: problem '" + p.id + "' is posed on the " + p.domain + " domain");
    m = p.m;
    data = problem_data(p, *mesh);
    exact = p.exact;
  } else {
    data = inline_data(c.data, m, *mesh);
  }
  ExperimentReport r;
  r.id = with_estimates ? "estimate" : "solve";
  r.m = m;
  r.mesh = c.mesh;
  r.seed = c.seed;
  if (!c.problem.empty())
    r.notes.push_back("problem " + c.problem);

  const SpacePtr V = build_space(mesh, nc_kind(m));
  r.n_dofs = V->n_dofs();
  const CompanionMap J = build_companion(V);
  const SparseMatrix A = assemble_stiffness(*V);
  EstimatorOptions eo;
  eo.h_convention = h_convention(c);
  eo.lambda_J = c.lambda_J;
  eo.residual_tol = c.residual_tol;
  eo.eigen = eigen_options(c);
  for (Scheme s : {Scheme::original, Scheme::modified}) {
    if (!wants(c, s))
      continue;
    const std::string tag = s == Scheme::original ? "org" : "mod";
    const Vector b = s == Scheme::original ? assemble_rhs_original(*V, data)
                                           : assemble_rhs_modified(J, data);
    const FeFunction u = V->n_dofs() ? FeFunction(V, solve_spd(A, b)) : FeFunction(V);
    const double be = V->n_dofs() ? backward_error(A, u.coeffs, b) : 0.0;
    r.set(tag + "_energy", energy_pw(u));
    r.set(tag + "_backward_error", be);
    r.checks.push_back(check_le(tag + " solve backward error", be, c.residual_tol));
    if (exact) {
      r.set(tag + "_error_energy_pw", error_norms(u, exact, smooth_data).energy_pw);
      const ErrorBundle ec = error_norms(companion(J, u), exact, smooth_data);
      r.set(tag + "_error_energy_conf", ec.energy_pw);
      r.set(tag + "_error_l2_conf", ec.l2);
    }
    if (!with_estimates)
      continue;
    EstimateReport est = s == Scheme::original ? estimate_original(J, data, u, eo)
                                               : estimate_modified(J, data, u, eo);
    if (exact) {
      measure_errors(est, J, u, exact, smooth_data);
      const double slack = 1.0 + 1e-6;
      r.checks.push_back(check_le(tag + " lhs_a <= bound_a", est.measured->lhs_a, est.bound_a * slack));
      r.checks.push_back(check_le(tag + " lhs_b <= bound_b", est.measured->lhs_b, est.bound_b * slack));
    }
    for (const auto& f : est.flags)
      r.notes.push_back(tag + ": " + f);
    r.estimates.push_back(std::move(est));
  }
  return from_report(r);
}

Outcome run_rates(const RunConfig& c)
{
  if (c.problem.empty())
    throw ConfigError("problem: rates needs a builtin problem id");
  const Problem p = make_problem(c.problem);
  RateOptions opt;
  opt.n0 = c.n0;
  opt.levels = c.levels;
  opt.fine_levels = c.fine_levels;
  opt.estimate = c.estimate;
  const RateTable t = run_rate_study(p, opt);
  Outcome o;
  o.id = "rates-" + p.id;
  o.m = p.m;
  o.mesh = p.domain + ":" + std::to_string(c.n0);
  o.body = to_json(t);
  o.csv = rate_csv(t, utc_timestamp());
  return o;
}

Outcome dispatch(const RunConfig& c)
{
  const EigenOptions eig = eigen_options(c);
  if (c.command == "verify") {
    VerifyOptions opt;
    opt.seed = c.seed;
    opt.eigen = eig;
    return from_report(run_verify(config_mesh(c), c.m, opt, c.mesh));
  }
  if (c.command == "lambda0") {
    Outcome o = from_report(run_attainment(config_mesh(c), c.m, c.mesh, eig));
    o.id = "lambda0";
    return o;
  }
  if (c.command == "compare")
    return from_report(run_scheme_comparison(config_mesh(c), c.m, c.mesh, eig));
  if (c.command == "counterexample") {
    if (c.variant == "cr")
      return from_report(run_counterexample_cr(config_mesh(c), c.mesh));
    if (c.variant == "morley")
      return from_report(run_counterexample_morley(config_mesh(c), c.mesh));
    if (c.variant == "oscillation") {
      OscillationOptions opt;
      opt.seed = c.seed;
      opt.target_osc = c.target_osc;
      return from_report(run_oscillation_example(config_mesh(c), opt, c.mesh));
    }
    throw ConfigError("variant must be cr, morley or oscillation");
  }
  if (c.command == "solve")
    return run_solve(c, false);
  if (c.command == "estimate")
    return run_solve(c, true);
  if (c.command == "rates")
    return run_rates(c);
  throw ConfigError("command '" + c.command + "' is unknown");
}

} // namespace

int main(int argc, char** argv)
{
  CLI::App app{"Crouzeix-Raviart and Morley discretizations with companion operators"};
  app.require_subcommand(1);
  app.fallthrough();

  RunConfig flags;
  std::string config_path;
  std::vector<std::pair<CLI::Option*, std::function<void(RunConfig&)>>> overrides;
  auto option = [&](const std::string& name, auto RunConfig::*member, const std::string& help) {
    CLI::Option* o = app.add_option(name, flags.*member, help);
    overrides.emplace_back(o, [member, &flags](RunConfig& c) { c.*member = flags.*member; });
    return o;
  };
  app.add_option("--config", config_path, "JSON run configuration; flags override its fields");
  option("--m", &RunConfig::m, "1 (Crouzeix-Raviart) or 2 (Morley)");
  option("--mesh", &RunConfig::mesh, "square:<n>, lshape:<n> or file:<path>");
  option("--scheme", &RunConfig::scheme, "original, modified or both");
  option("--problem", &RunConfig::problem, "builtin problem id");
  option("--levels", &RunConfig::levels, "refinement levels of a rate study");
  option("--n0", &RunConfig::n0, "base mesh parameter of a rate study");
  option("--fine-levels", &RunConfig::fine_levels, "extra refinements of a fine-grid reference");
  option("--residual-tol", &RunConfig::residual_tol, "backward error accepted for discrete solves");
  option("--eigen-tol", &RunConfig::eigen_tol, "eigen residual tolerance");
  option("--dense-limit", &RunConfig::dense_limit, "largest dense generalized eigenproblem");
  option("--lambda-J", &RunConfig::lambda_J, "certified Lambda_J for the modified-scheme bound");
  option("--target-osc", &RunConfig::target_osc, "||G - Pi_0 G|| of the oscillation example");
  option("--seed", &RunConfig::seed, "random seed");
  option("--h-convention", &RunConfig::h_convention, "diameter or sqrt_area");
  option("--out", &RunConfig::out_dir, "output directory");
  option("--json", &RunConfig::json_path, "report path");
  option("--csv", &RunConfig::csv_path, "rate table path");
  option("--threads", &RunConfig::threads, "worker threads (overrides NCFEM_THREADS)");
  {
    CLI::Option* o = app.add_flag("--estimate", flags.estimate, "estimator columns in rate studies");
    overrides.emplace_back(o, [&flags](RunConfig& c) { c.estimate = flags.estimate; });
  }

  app.add_subcommand("verify", "operator invariants of I_nc and J on one mesh");
  app.add_subcommand("solve", "solve both schemes for a problem or inline data");
  app.add_subcommand("rates", "convergence-rate study of a builtin problem");
  app.add_subcommand("lambda0", "Lambda_0, C_qo and the attainment identities");
  auto* ce = app.add_subcommand("counterexample", "data defeating best approximation (cr, morley) "
                                                  "or dominating oscillations (oscillation)");
  std::string variant;
  ce->add_option("variant", variant, "cr, morley or oscillation")->required();
  app.add_subcommand("compare", "original versus modified scheme on extremal data");
  app.add_subcommand("estimate", "a posteriori bounds for both schemes");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? exit_ok : exit_usage;
  }

  RunConfig cfg;
  Outcome out;
  std::string json_path;
  try {
    if (!config_path.empty())
      cfg = load_config(config_path);
    for (auto& [o, apply] : overrides)
      if (o->count() > 0)
        apply(cfg);
    cfg.command = app.get_subcommands().front()->get_name();
    if (!variant.empty())
      cfg.variant = variant;
    validate(cfg);
    if (cfg.threads > 0)
      set_worker_count(cfg.threads);
    out = dispatch(cfg);
    json_path = !cfg.json_path.empty()
                    ? cfg.json_path
                    : cfg.out_dir + "/" + report_filename(out.id, out.m, out.mesh, cfg.seed, "json");
    write_text(json_path, wrap_report(out.id, config_to_json(cfg), out.body).dump(2) + "\n");
    if (!out.csv.empty()) {
      const std::string csv_path =
          !cfg.csv_path.empty() ? cfg.csv_path
                                : cfg.out_dir + "/" + report_filename(out.id, out.m, out.mesh, cfg.seed, "csv");
      write_text(csv_path, out.csv);
      std::cout << "rate table: " << csv_path << "\n";
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_usage;
  }

  bool passed = true;
  for (const auto& c : out.checks) {
    std::cout << (c.passed ? "PASS " : "FAIL ") << c.name << "  value=" << c.value << " ("
              << c.relation << " " << c.expected << ")\n";
    passed = passed && c.passed;
  }
  std::cout << "report: " << json_path << "\n";
  return passed ? exit_ok : exit_failed;
}
