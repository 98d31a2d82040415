#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include <json.hpp>

#include "gyroqfi/config.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Result {
  int code = -1;
  std::string out;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("gyroqfi_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

Result run(const std::string& args, const fs::path& dir) {
  const fs::path log = dir / "log.txt";
  const std::string cmd = std::string("\"") + GYRO_CLI_PATH + "\" " + args + " > \"" + log.string() + "\" 2>&1";
  const int status = std::system(cmd.c_str());
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(log)};
}

}  // namespace

TEST_CASE("missing params file is an input error naming the path") {
  const fs::path dir = scratch("missing");
  const Result r = run("simulate --params /nonexistent/p.json --output-dir " + dir.string(), dir);
  CHECK(r.code == 1);
  CHECK(r.out.find("/nonexistent/p.json") != std::string::npos);
}

TEST_CASE("unknown override key is an input error") {
  const fs::path dir = scratch("unknown");
  const Result r = run("simulate --override bogus_key=1 --output-dir " + dir.string(), dir);
  CHECK(r.code == 1);
  CHECK(r.out.find("bogus_key") != std::string::npos);
}

TEST_CASE("help lists the config keys") {
  const fs::path dir = scratch("help");
  const Result r = run("--help", dir);
  CHECK(r.code == 0);
  for (const auto& k : gyro::config::keys()) CHECK(r.out.find(k.name) != std::string::npos);
}

TEST_CASE("simulate writes outputs and a reproducible manifest") {
  const fs::path dir = scratch("simulate");
  const Result r =
      run("simulate --override epsilon=100 samples=5 t_end_omega_m=2 --output-dir " + dir.string(), dir);
  REQUIRE(r.code == 0);
  const fs::path manifest = dir / "gyroqfi_ccw_eps100_manifest.json";
  REQUIRE(fs::exists(manifest));
  CHECK(fs::exists(dir / "gyroqfi_ccw_eps100.csv"));
  CHECK(fs::exists(dir / "gyroqfi_ccw_eps100_qfi.csv"));
  const json m = json::parse(slurp(manifest));
  CHECK(m["command"] == "simulate");
  const json eff = m["effective_parameters"];
  CHECK(eff["epsilon"] == 100.0);
  CHECK(gyro::config::to_json(gyro::config::from_json(eff)) == eff);

  const fs::path again = scratch("simulate_again");
  const fs::path params = again / "effective.json";
  std::ofstream(params) << eff.dump(2);
  const Result r2 = run("simulate --params " + params.string() + " --output-dir " + again.string(), again);
  REQUIRE(r2.code == 0);
  CHECK(slurp(again / "effective_ccw_eps100_qfi.csv") == slurp(dir / "gyroqfi_ccw_eps100_qfi.csv"));
}

TEST_CASE("numerical failure exits with code 2 and writes diagnostics") {
  const fs::path dir = scratch("failure");
  const Result r =
      run("simulate --override epsilon=1e12 samples=3 t_end_omega_m=200 --output-dir " + dir.string(), dir);
  CHECK(r.code == 2);
  REQUIRE(fs::exists(dir / "diagnostics.json"));
  const json d = json::parse(slurp(dir / "diagnostics.json"));
  CHECK(d["error_type"] == "numerical_failure");
  CHECK(d["effective_parameters"]["epsilon"] == 1e12);
}

TEST_CASE("selftest passes") {
  const fs::path dir = scratch("selftest");
  const Result r = run("selftest --output-dir " + dir.string(), dir);
  CHECK(r.code == 0);
  CHECK(r.out.find("FAIL") == std::string::npos);
}
