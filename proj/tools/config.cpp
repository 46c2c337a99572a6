#include "config.hpp"

#include <fstream>
#include <functional>
#include <map>

namespace ncfem::cli {

namespace {

template <class T>
T field(const Json& j, const std::string& key)
{
  try {
    return j.get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError("config field '" + key + "' has the wrong type (" + j.type_name() + ")");
  }
}

using Setter = std::function<void(RunConfig&, const Json&, const std::string&)>;

template <class T>
Setter set(T RunConfig::*member)
{
  return [member](RunConfig& c, const Json& j, const std::string& key) { c.*member = field<T>(j, key); };
}

const std::map<std::string, Setter>& setters()
{
  static const std::map<std::string, Setter> s = {
      {"command", set(&RunConfig::command)},
      {"variant", set(&RunConfig::variant)},
      {"m", set(&RunConfig::m)},
      {"mesh", set(&RunConfig::mesh)},
      {"scheme", set(&RunConfig::scheme)},
      {"problem", set(&RunConfig::problem)},
      {"data", [](RunConfig& c, const Json& j, const std::string& key) {
         if (!j.is_object())
           throw ConfigError("config field '" + key + "' must be an object");
         c.data = j;
       }},
      {"levels", set(&RunConfig::levels)},
      {"n0", set(&RunConfig::n0)},
      {"fine_levels", set(&RunConfig::fine_levels)},
      {"estimate", set(&RunConfig::estimate)},
      {"residual_tol", set(&RunConfig::residual_tol)},
      {"eigen_tol", set(&RunConfig::eigen_tol)},
      {"dense_limit", set(&RunConfig::dense_limit)},
      {"lambda_J", set(&RunConfig::lambda_J)},
      {"target_osc", set(&RunConfig::target_osc)},
      {"seed", set(&RunConfig::seed)},
      {"h_convention", set(&RunConfig::h_convention)},
      {"out_dir", set(&RunConfig::out_dir)},
      {"json_path", set(&RunConfig::json_path)},
      {"csv_path", set(&RunConfig::csv_path)},
      {"threads", set(&RunConfig::threads)},
  };
  return s;
}

struct Term {
  double c;
  int px, py;
};

std::vector<Term> terms(const Json& j, const std::string& key)
{
  if (!j.is_array())
    throw ConfigError("data field '" + key + "' must be a list of [c, px, py] terms");
  std::vector<Term> out;
  for (const auto& t : j) {
    if (!t.is_array() || t.size() != 3 || !t[0].is_number() || !t[1].is_number_unsigned() ||
        !t[2].is_number_unsigned())
      throw ConfigError("data field '" + key + "': each term is [c, px, py] with px, py >= 0");
    out.push_back({t[0].get<double>(), t[1].get<int>(), t[2].get<int>()});
  }
  return out;
}

int degree(const std::vector<Term>& p)
{
  int d = 0;
  for (const auto& t : p)
    d = std::max(d, t.px + t.py);
  return d;
}

double evaluate(const std::vector<Term>& p, const Vec2& x)
{
  double s = 0.0;
  for (const auto& t : p)
    s += t.c * std::pow(x(0), t.px) * std::pow(x(1), t.py);
  return s;
}

} // namespace

RunConfig config_from_json(const Json& j, RunConfig base)
{
  if (!j.is_object())
    throw ConfigError("config must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    const auto it = setters().find(key);
    if (it == setters().end())
      throw ConfigError("unknown config field '" + key + "'");
    it->second(base, value, key);
  }
  return base;
}

RunConfig load_config(const std::string& path)
{
  std::ifstream f(path);
  if (!f)
    throw ConfigError("config: cannot open '" + path + "'");
  Json j;
  try {
    j = Json::parse(f);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("config '" + path + "' is not valid JSON: " + e.what());
  }
  return config_from_json(j);
}

Json config_to_json(const RunConfig& c)
{
  return {{"command", c.command},
          {"variant", c.variant},
          {"m", c.m},
          {"mesh", c.mesh},
          {"scheme", c.scheme},
          {"problem", c.problem},
          {"data", c.data},
          {"levels", c.levels},
          {"n0", c.n0},
          {"fine_levels", c.fine_levels},
          {"estimate", c.estimate},
          {"residual_tol", c.residual_tol},
          {"eigen_tol", c.eigen_tol},
          {"dense_limit", c.dense_limit},
          {"lambda_J", c.lambda_J},
          {"target_osc", c.target_osc},
          {"seed", c.seed},
          {"h_convention", c.h_convention},
          {"out_dir", c.out_dir},
          {"json_path", c.json_path},
          {"csv_path", c.csv_path},
          {"threads", c.threads}};
}

void validate(const RunConfig& c)
{
  if (c.m != 1 && c.m != 2)
    throw ConfigError("m must be 1 or 2");
  if (c.scheme != "original" && c.scheme != "modified" && c.scheme != "both")
    throw ConfigError("scheme must be original, modified or both");
  if (c.h_convention != "diameter" && c.h_convention != "sqrt_area")
    throw ConfigError("h_convention must be diameter or sqrt_area");
  if (c.levels < 1 || c.levels > 7)
    throw ConfigError("levels must lie in [1, 7]");
  if (c.n0 < 1)
    throw ConfigError("n0 must be positive");
  if (c.fine_levels < 1)
    throw ConfigError("fine_levels must be positive");
  if (!(c.residual_tol > 0.0 && c.residual_tol < 1.0))
    throw ConfigError("residual_tol must lie in (0, 1)");
  if (!(c.eigen_tol > 0.0 && c.eigen_tol < 1.0))
    throw ConfigError("eigen_tol must lie in (0, 1)");
  if (c.dense_limit < 0)
    throw ConfigError("dense_limit must be nonnegative");
  if (c.threads < 0)
    throw ConfigError("threads must be nonnegative");
  if (!(c.target_osc >= 0.0))
    throw ConfigError("target_osc must be nonnegative");
  if (!c.problem.empty()) {
    const auto ids = problem_ids();
    if (std::find(ids.begin(), ids.end(), c.problem) == ids.end())
      throw ConfigError("problem '" + c.problem + "' is unknown");
  }
  for (const auto& [key, value] : c.data.items())
    if (key != "g" && key != "G" && key != "point_forces")
      throw ConfigError("unknown data field '" + key + "'");
}

HConvention h_convention(const RunConfig& c)
{
  return c.h_convention == "sqrt_area" ? HConvention::sqrt_area : HConvention::diameter;
}

RhsData inline_data(const Json& data, int m, const Triangulation& mesh)
{
  RhsData d;
  d.m = m;
  if (data.contains("g")) {
    const auto p = terms(data["g"], "g");
    d.g = [p](int, const Vec2& x) { return evaluate(p, x); };
    d.g_degree = degree(p);
  }
  if (data.contains("G")) {
    const Json& G = data["G"];
    const std::size_t n = m == 1 ? 2 : 4;
    if (!G.is_array() || G.size() != n)
      throw ConfigError("data field 'G' needs " + std::to_string(n) + " components for m = " +
                        std::to_string(m));
    std::vector<std::vector<Term>> comps;
    for (std::size_t k = 0; k < n; ++k) {
      comps.push_back(terms(G[k], "G[" + std::to_string(k) + "]"));
      d.G_degree = std::max(d.G_degree, degree(comps.back()));
    }
    d.G = [comps](int, const Vec2& x) {
      DerivTensor out{0, 0, 0, 0};
      for (std::size_t k = 0; k < comps.size(); ++k)
        out[k] = evaluate(comps[k], x);
      return out;
    };
  }
  if (data.contains("point_forces")) {
    const Json& pf = data["point_forces"];
    if (!pf.is_array())
      throw ConfigError("data field 'point_forces' must be a list");
    for (const auto& f : pf) {
      if (!f.is_object() || !f.contains("x") || !f.contains("y"))
        throw ConfigError("data field 'point_forces': each entry needs x and y");
      for (const auto& [key, value] : f.items())
        if (key != "x" && key != "y" && key != "value" && key != "mu")
          throw ConfigError("unknown point_forces field '" + key + "'");
      const Vec2 p(field<double>(f["x"], "point_forces.x"), field<double>(f["y"], "point_forces.y"));
      const double beta = f.contains("value") ? field<double>(f["value"], "point_forces.value") : 1.0;
      const double mu = f.contains("mu") ? field<double>(f["mu"], "point_forces.mu") : 0.5;
      try {
        d.point_forces.push_back(locate_point_force(mesh, p, beta, mu));
      } catch (const Error& e) {
        throw ConfigError(std::string("data field 'point_forces': ") + e.what());
      }
    }
  }
  try {
    d.validate();
  } catch (const Error& e) {
    throw ConfigError(std::string("data: ") + e.what());
  }
  return d;
}

} // namespace ncfem::cli
