#pragma once

#include "ncfem/experiments.hpp"
#include "ncfem/report.hpp"

#include <cstdint>
#include <string>

namespace ncfem::cli {

// Thrown for invalid configuration; the message names the offending field.
struct ConfigError : Error {
  using Error::Error;
};

struct RunConfig {
  std::string command;
  std::string variant;          // counterexample: cr, morley or oscillation
  int m = 1;
  std::string mesh = "square:2";
  std::string scheme = "both";  // original, modified, both
  std::string problem;          // builtin problem id; overrides the inline data
  // Inline data: {"g": [[c, px, py], ...], "G": [[[c, px, py], ...], ...] (2 components for
  // m = 1, xx/xy/yx/yy for m = 2), "point_forces": [{"x": .., "y": .., "value": .., "mu": ..}]}.
  Json data = Json::object();
  int levels = 4;
  int n0 = 2;
  int fine_levels = 2;
  bool estimate = false;
  double residual_tol = 1e-9;
  double eigen_tol = 1e-9;
  int dense_limit = 3000;
  double lambda_J = -1.0;       // certified Lambda_J; negative uses the Lambda_0 surrogate
  double target_osc = 1.0;      // oscillation example
  std::uint64_t seed = 1;
  std::string h_convention = "diameter";
  std::string out_dir = "ncfem-out";
  std::string json_path;        // report path; default out_dir/<id>_m<m>_<mesh>_seed<seed>.json
  std::string csv_path;         // rate table path; default next to the report
  int threads = 0;              // 0 keeps NCFEM_THREADS or the hardware default
};

// Strict: unknown keys and wrong types throw ConfigError naming the field.
RunConfig config_from_json(const Json& j, RunConfig base = {});
RunConfig load_config(const std::string& path);
Json config_to_json(const RunConfig& c);
// Range and consistency checks shared by file and flags.
void validate(const RunConfig& c);

RhsData inline_data(const Json& data, int m, const Triangulation& mesh);
HConvention h_convention(const RunConfig& c);

} // namespace ncfem::cli
