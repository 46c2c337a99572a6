#pragma once

#include "ncfem/experiments.hpp"

#include <json.hpp>

#include <string>

namespace ncfem {

using Json = nlohmann::ordered_json;

inline constexpr const char* report_schema = "ncfem-report-v1";

Json to_json(const Check& c);
Json to_json(const EstimateReport& r);
Json to_json(const Lambda0Result& r);
Json to_json(const ExperimentReport& r);
Json to_json(const RateTable& t);

// {"schema": ..., "kind": kind, "config": config, "result": body}. NaN becomes null.
Json wrap_report(const std::string& kind, const Json& config, const Json& body);

// level,ndof,hmax,<columns>,<rate_<rated column>> with a leading "# ..." comment line holding
// the problem and the timestamp; everything after that line is a function of the table only.
std::string rate_csv(const RateTable& t, const std::string& timestamp);

// "<id>_m<m>_<mesh>_seed<seed>.<ext>" with path separators and colons in the mesh id replaced.
std::string report_filename(const std::string& id, int m, const std::string& mesh,
                            std::uint64_t seed, const std::string& ext);

// Creates parent directories; throws Error when the file cannot be written.
void write_text(const std::string& path, const std::string& content);

} // namespace ncfem
