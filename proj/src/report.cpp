#include "ncfem/report.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace ncfem {

namespace {

Json number(double v)
{
  if (std::isfinite(v))
    return v;
  return nullptr;
}

std::string format_number(double v)
{
  if (std::isnan(v))
    return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10e", v);
  return buf;
}

} // namespace

Json to_json(const Check& c)
{
  return {{"name", c.name},         {"value", number(c.value)}, {"expected", number(c.expected)},
          {"tol", number(c.tol)},   {"relation", c.relation},   {"passed", c.passed}};
}

Json to_json(const EstimateReport& r)
{
  Json j;
  j["scheme"] = to_string(r.scheme);
  j["m"] = r.m;
  const auto& t = r.terms;
  j["terms"] = {{"G_osc", number(t.G_osc)},
                {"g_weighted", number(t.g_weighted)},
                {"g_osc", number(t.g_osc)},
                {"nonconf", number(t.nonconf)},
                {"Fhat_correction", number(t.Fhat_correction)},
                {"apx_F", number(t.apx_F)}};
  const auto& c = r.constants;
  j["constants"] = {{"kappa", number(c.kappa)},
                    {"lambda0", number(c.lambda0)},
                    {"lambda_J", number(c.lambda_J)},
                    {"lambda_J_surrogate", c.lambda_J_surrogate}};
  j["bounds"] = {{"bound_a", number(r.bound_a)}, {"bound_b", number(r.bound_b)}};
  j["solve_residual"] = number(r.solve_residual);
  if (r.measured) {
    const auto& e = *r.measured;
    j["measured_errors"] = {{"energy_conf", number(e.energy_conf)},
                            {"energy_pw", number(e.energy_pw)},
                            {"interp_error", number(e.interp_error)},
                            {"lhs_a", number(e.lhs_a)},
                            {"lhs_b", number(e.lhs_b)}};
    j["reliable"] = r.reliable();
  }
  j["flags"] = r.flags;
  return j;
}

Json to_json(const Lambda0Result& r)
{
  return {{"lambda0", number(r.lambda0)},       {"c_qo", number(r.c_qo)},
          {"lambda_max", number(r.lambda_max)}, {"dim", r.dim},
          {"eigen_residual", number(r.residual)}, {"iterations", r.iterations},
          {"method", r.method}};
}

Json to_json(const ExperimentReport& r)
{
  Json j;
  j["id"] = r.id;
  j["m"] = r.m;
  j["mesh"] = r.mesh;
  j["seed"] = r.seed;
  j["n_dofs"] = r.n_dofs;
  Json values = Json::object();
  for (const auto& [k, v] : r.values)
    values[k] = number(v);
  j["values"] = values;
  j["checks"] = Json::array();
  for (const auto& c : r.checks)
    j["checks"].push_back(to_json(c));
  j["passed"] = r.passed();
  j["notes"] = r.notes;
  j["estimates"] = Json::array();
  for (const auto& e : r.estimates)
    j["estimates"].push_back(to_json(e));
  return j;
}

Json to_json(const RateTable& t)
{
  Json j;
  j["problem"] = t.problem;
  j["m"] = t.m;
  j["sigma"] = number(t.sigma);
  j["columns"] = t.columns;
  j["rows"] = Json::array();
  for (const auto& row : t.rows) {
    Json r = {{"level", row.level}, {"ndof", row.ndof}, {"hmax", number(row.hmax)}};
    for (std::size_t c = 0; c < t.columns.size(); ++c)
      r[t.columns[c]] = number(row.values[c]);
    j["rows"].push_back(r);
  }
  Json fits = Json::object();
  for (const auto& [name, f] : t.fits) {
    Json rates = Json::array();
    for (double x : f.rates)
      rates.push_back(number(x));
    fits[name] = {{"rates", rates}, {"ls_rate", number(f.ls_rate)}, {"below_floor", f.below_floor}};
  }
  j["fits"] = fits;
  Json expected = Json::object();
  for (const auto& [name, v] : t.expected_rates)
    expected[name] = number(v);
  j["expected_rates"] = expected;
  j["notes"] = t.notes;
  return j;
}

Json wrap_report(const std::string& kind, const Json& config, const Json& body)
{
  return {{"schema", report_schema}, {"kind", kind}, {"config", config}, {"result", body}};
}

std::string rate_csv(const RateTable& t, const std::string& timestamp)
{
  std::ostringstream out;
  out << "# ncfem rate table problem=" << t.problem << " m=" << t.m << " generated " << timestamp
      << "\n";
  out << "level,ndof,hmax";
  for (const auto& c : t.columns)
    out << ',' << c;
  for (std::size_t c = 0; c < t.columns.size(); ++c)
    if (t.rated[c])
      out << ",rate_" << t.columns[c];
  out << "\n";
  for (std::size_t l = 0; l < t.rows.size(); ++l) {
    const auto& row = t.rows[l];
    out << row.level << ',' << row.ndof << ',' << format_number(row.hmax);
    for (double v : row.values)
      out << ',' << format_number(v);
    for (std::size_t c = 0; c < t.columns.size(); ++c) {
      if (!t.rated[c])
        continue;
      const auto it = t.fits.find(t.columns[c]);
      const bool have = l > 0 && it != t.fits.end();
      out << ',' << format_number(have ? it->second.rates[l - 1] : std::nan(""));
    }
    out << "\n";
  }
  return out.str();
}

std::string report_filename(const std::string& id, int m, const std::string& mesh,
                            std::uint64_t seed, const std::string& ext)
{
  std::string clean = mesh.empty() ? "none" : mesh;
  for (char& ch : clean)
    if (ch == ':' || ch == '/' || ch == '\\' || ch == ' ')
      ch = '-';
  return id + "_m" + std::to_string(m) + "_" + clean + "_seed" + std::to_string(seed) + "." + ext;
}

void write_text(const std::string& path, const std::string& content)
{
  const std::filesystem::path p(path);
  std::error_code ec;
  if (p.has_parent_path())
    std::filesystem::create_directories(p.parent_path(), ec);
  std::ofstream f(p, std::ios::binary);
  if (!f)
    throw Error("cannot open '" + path + "' for writing");
  f << content;
  if (!f)
    throw Error("failed writing '" + path + "'");
}

} // namespace ncfem
