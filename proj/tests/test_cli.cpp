#include <doctest.h>

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <unistd.h>

namespace fs = std::filesystem;

namespace {

struct Run {
  int code = -1;
  std::string out; // stdout and stderr
};

Run run(const std::string& args)
{
  const std::string cmd = std::string(NCFEM_CLI_PATH) + " " + args + " 2>&1";
  FILE* p = popen(cmd.c_str(), "r");
  REQUIRE(p != nullptr);
  Run r;
  char buf[4096];
  while (std::size_t n = std::fread(buf, 1, sizeof buf, p))
    r.out.append(buf, n);
  const int status = pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string slurp(const fs::path& p)
{
  std::ifstream f(p);
  std::stringstream s;
  s << f.rdbuf();
  return s.str();
}

// Fresh scratch directory per test case.
fs::path scratch(const std::string& name)
{
  const fs::path d = fs::temp_directory_path() / ("ncfem-cli-" + std::to_string(::getpid())) / name;
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

std::string after_first_line(const std::string& s) { return s.substr(s.find('\n') + 1); }

} // namespace

TEST_CASE("verify on the two-by-two square")
{
  const fs::path d = scratch("verify");
  const Run r = run("verify --m 1 --mesh square:2 --out " + d.string());
  CAPTURE(r.out);
  CHECK(r.code == 0);
  CHECK(r.out.find("FAIL") == std::string::npos);
  CHECK(fs::exists(d / "verify_m1_square-2_seed1.json"));
}

TEST_CASE("lambda0 writes Lambda0, C_qo and the eigen residual")
{
  const fs::path d = scratch("lambda0");
  const fs::path json = d / "out.json";
  const Run r = run("lambda0 --m 2 --mesh square:2 --json " + json.string());
  CAPTURE(r.out);
  REQUIRE(r.code == 0);
  const auto j = nlohmann::json::parse(slurp(json));
  CHECK(j["schema"] == "ncfem-report-v1");
  CHECK(j["kind"] == "lambda0");
  CHECK(j["config"]["m"] == 2);
  CHECK(j["config"]["mesh"] == "square:2");
  const auto& v = j["result"]["values"];
  const double l0 = v["lambda0"], cqo = v["c_qo"], res = v["eigen_residual"];
  CHECK(l0 > 1.0);
  CHECK(cqo == doctest::Approx(std::sqrt(1 + l0 * l0)).epsilon(1e-12));
  CHECK(res <= 1e-9);
}

TEST_CASE("counterexample cr asserts |||u_org||| = 1")
{
  const fs::path d = scratch("cr");
  const fs::path json = d / "cr.json";
  const Run r = run("counterexample cr --mesh square:2 --json " + json.string());
  CAPTURE(r.out);
  REQUIRE(r.code == 0);
  const auto j = nlohmann::json::parse(slurp(json));
  CHECK(double(j["result"]["values"]["u_org_energy"]) == doctest::Approx(1.0).epsilon(1e-10));
  bool asserted = false;
  for (const auto& c : j["result"]["checks"])
    asserted = asserted || std::string(c["name"]).find("u_org") != std::string::npos;
  CHECK(asserted);
}

TEST_CASE("usage and configuration errors exit with 1")
{
  const fs::path d = scratch("errors");
  CHECK(run("frobnicate").code == 1);
  CHECK(run("verify --m 3").code == 1);
  CHECK(run("counterexample nope --mesh square:2 --out " + d.string()).code == 1);

  std::ofstream(d / "unknown.json") << R"({"m": 1, "meshh": "square:2"})";
  Run r = run("verify --config " + (d / "unknown.json").string());
  CHECK(r.code == 1);
  CHECK(r.out.find("meshh") != std::string::npos);

  std::ofstream(d / "type.json") << R"({"levels": "four"})";
  r = run("rates --config " + (d / "type.json").string());
  CHECK(r.code == 1);
  CHECK(r.out.find("levels") != std::string::npos);

  std::ofstream(d / "data.json") << R"({"data": {"g": [[1, 0, 0]], "h": []}})";
  r = run("solve --config " + (d / "data.json").string());
  CHECK(r.code == 1);
  CHECK(r.out.find("'h'") != std::string::npos);
}

TEST_CASE("flags win over the config file")
{
  const fs::path d = scratch("override");
  std::ofstream(d / "c.json") << R"({"m": 1, "mesh": "square:1", "out_dir": ")" << d.string()
                              << R"(", "seed": 7})";
  const Run r = run("lambda0 --config " + (d / "c.json").string() + " --mesh square:2");
  CAPTURE(r.out);
  REQUIRE(r.code == 0);
  const fs::path json = d / "lambda0_m1_square-2_seed7.json";
  REQUIRE(fs::exists(json));
  const auto j = nlohmann::json::parse(slurp(json));
  CHECK(j["config"]["mesh"] == "square:2");
  CHECK(j["config"]["seed"] == 7);
  // Defaults are recorded too.
  CHECK(j["config"]["h_convention"] == "diameter");
  CHECK(j["config"]["residual_tol"] == 1e-9);
}

TEST_CASE("rate tables are reproducible up to the timestamp comment")
{
  const fs::path d = scratch("rates");
  const std::string args = "rates --problem square-smooth-m1 --levels 3 --estimate --out ";
  const Run a = run(args + (d / "a").string() + " --threads 2");
  const Run b = run(args + (d / "b").string() + " --threads 1");
  CAPTURE(a.out);
  REQUIRE(a.code == 0);
  REQUIRE(b.code == 0);
  const std::string name = "rates-square-smooth-m1_m1_square-2_seed1.csv";
  const std::string ca = slurp(d / "a" / name), cb = slurp(d / "b" / name);
  REQUIRE_FALSE(ca.empty());
  CHECK(ca.rfind("# ", 0) == 0);
  CHECK(after_first_line(ca) == after_first_line(cb));
  CHECK(after_first_line(ca).rfind("level,ndof,hmax,", 0) == 0);
}

TEST_CASE("inline data and a failed assertion")
{
  const fs::path d = scratch("inline");
  std::ofstream(d / "c.json") << R"({"m": 2, "mesh": "square:4", "data": {"g": [[1, 0, 0], [2, 1, 0]]}})";
  Run r = run("estimate --config " + (d / "c.json").string() + " --out " + d.string());
  CAPTURE(r.out);
  CHECK(r.code == 0);
  CHECK(r.out.find("Lambda_J~Lambda_0") == std::string::npos); // notes live in the report
  const auto j = nlohmann::json::parse(slurp(d / "estimate_m2_square-4_seed1.json"));
  CHECK(j["result"]["estimates"].size() == 2);

  // An unreachable solver tolerance fails its check: exit 2 with the report written.
  const fs::path json = d / "strict.json";
  r = run("solve --config " + (d / "c.json").string() + " --residual-tol 1e-300 --json " + json.string());
  CHECK(r.code == 2);
  CHECK(r.out.find("FAIL") != std::string::npos);
  CHECK(fs::exists(json));
}
