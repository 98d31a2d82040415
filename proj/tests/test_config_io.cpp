#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string>

#include "generators.hpp"
#include "gyroqfi/config.hpp"
#include "gyroqfi/errors.hpp"
#include "gyroqfi/io.hpp"

using namespace gyro;
using namespace gyro::config;
using gyro::testing::for_all;
using gyro::testing::Gen;
namespace fs = std::filesystem;

namespace {

std::string error_of(auto&& f) {
  try {
    f();
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("gyroqfi_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::vector<std::string> read_lines(const fs::path& p) {
  std::ifstream in(p);
  std::vector<std::string> lines;
  for (std::string l; std::getline(in, l);) lines.push_back(l);
  return lines;
}

}  // namespace

TEST_CASE("empty object gives the defaults") {
  const Settings s = from_json(json::object());
  CHECK(to_json(s) == to_json(Settings{}));
  const PhysicalParams p = physical_params(s);
  CHECK(p.kappa == 0.44);
  CHECK(p.gamma_m == 3.5e-3);
  CHECK(p.epsilon == 2000.0);
  CHECK(p.omega == 2000.0);
  CHECK(p.delta_c == 0.5);
  CHECK(p.drive == DriveDirection::ccw);
  CHECK(!p.g0_override);
}

TEST_CASE("unknown keys and wrong types name the key") {
  CHECK(error_of([] { from_json(json{{"epsilonn", 1.0}}); }).find("epsilonn") != std::string::npos);
  CHECK(error_of([] { from_json(json{{"epsilon", "big"}}); }).find("epsilon") != std::string::npos);
  CHECK(error_of([] { from_json(json{{"drive", "up"}}); }).find("drive") != std::string::npos);
  CHECK(error_of([] { from_json(json{{"sweep_points", 2.5}}); }).find("sweep_points") != std::string::npos);
  CHECK(error_of([] { from_json(json::array()); }) != "");
}

TEST_CASE("ratio keys win over SI keys") {
  const Settings both = from_json(json{{"kappa_over_omega_m", 0.3}, {"kappa_si", 1e7}});
  CHECK(physical_params(both).kappa == 0.3);
  const Settings si = from_json(json{{"kappa_si", 1e7}});
  CHECK(physical_params(si).kappa == doctest::Approx(1e7 / 5e7));
  const Settings g = from_json(json{{"gamma_m_over_omega_m", nullptr}, {"gamma_m_si", 5e5}});
  CHECK(physical_params(g).gamma_m == doctest::Approx(0.01));
}

TEST_CASE("exclusive groups reject two members") {
  const std::string e = error_of([] { from_json(json{{"omega", 1.0}, {"omega_hz", 2.0}}); });
  CHECK(e.find("omega") != std::string::npos);
  CHECK(e.find("omega_hz") != std::string::npos);
  CHECK(error_of([] { from_json(json{{"n_bar_m", 1.0}, {"temperature_k", 2.0}}); }).find("temperature_k") !=
        std::string::npos);
  CHECK(error_of([] { from_json(json{{"J_over_omega_m", 0.1}, {"J_over_kappa", 0.2}}); }).find("J_over_kappa") !=
        std::string::npos);
}

TEST_CASE("alternative keys convert to internal units") {
  Settings s = from_json(json{{"omega", nullptr}, {"omega_hz", 2000.0}});
  CHECK(omega_rad_per_s(s) == doctest::Approx(2.0 * std::numbers::pi * 2000.0));
  s = from_json(json{{"omega", 3.0}, {"omega_input_unit", "hz"}});
  CHECK(physical_params(s).omega == doctest::Approx(6.0 * std::numbers::pi));
  s = from_json(json{{"J_over_omega_m", nullptr}, {"J_over_kappa", 1.0}, {"kappa_over_omega_m", 0.3}});
  CHECK(physical_params(s).backscatter_J == doctest::Approx(0.3));
  s = from_json(json{{"n_bar_m", nullptr}, {"temperature_k", 0.01}});
  CHECK(physical_params(s).n_bar_m == doctest::Approx(thermal_occupation(5e7, 0.01)));
  s = from_json(json{{"g0_over_omega_m", 0.02}, {"sagnac_slope", 0.0}});
  CHECK(*physical_params(s).g0_override == 0.02);
  CHECK(*physical_params(s).sagnac_slope_override == 0.0);
}

TEST_CASE("physical validation surfaces as a config error") {
  CHECK(error_of([] { physical_params(from_json(json{{"kappa_over_omega_m", -1.0}})); }).find("kappa") !=
        std::string::npos);
}

TEST_CASE("overrides parse JSON values and replace group members") {
  json j = apply_overrides(json{{"omega", 5.0}}, {"epsilon=6000", "drive=cw", "omega_hz=2000",
                                                   "scaling_epsilons=[1,2]"});
  CHECK(j["epsilon"] == 6000);
  CHECK(j["drive"] == "cw");
  CHECK(!j.contains("omega"));
  CHECK(j["omega_hz"] == 2000);
  const Settings s = from_json(j);
  CHECK(s.drive == DriveDirection::cw);
  CHECK(s.scaling_epsilons == std::vector<double>{1.0, 2.0});
  CHECK(error_of([] { apply_overrides(json::object(), {"nope=1"}); }).find("nope") != std::string::npos);
  CHECK(error_of([] { apply_overrides(json::object(), {"epsilon"}); }) != "");
}

TEST_CASE("settings survive a JSON round trip") {
  for_all(30, 71, [](Gen& g) {
    std::vector<std::string> ov{
        "epsilon=" + std::to_string(g.uniform(0.0, 8000.0)),
        "delta_c_over_omega_m=" + std::to_string(g.uniform(-1.5, 1.5)),
        std::string("drive=") + (g.coin() ? "ccw" : "cw"),
        std::string("omega_input_unit=") + (g.coin() ? "hz" : "rad_per_s"),
        "ppo_hidden_sizes=[" + std::to_string(g.integer(1, 64)) + "," + std::to_string(g.integer(1, 64)) + "]",
        "seed=" + std::to_string(g.integer(0, 1 << 30)),
        g.coin() ? "temperature_k=0.5" : "n_bar_m=2.5",
        g.coin() ? "J_over_kappa=0.1" : "J_over_omega_m=0.03",
    };
    const Settings s = from_json(apply_overrides(json::object(), ov));
    const json j = to_json(s);
    CHECK(to_json(from_json(j)) == j);
  });
}

TEST_CASE("comments are stripped") {
  const json j = parse_text("{\n // line\n \"epsilon\": 10, /* block */ \"drive\": \"cw\"\n}", "inline");
  CHECK(j["epsilon"] == 10);
  CHECK(j["drive"] == "cw");
  CHECK(error_of([] { parse_text("{ \"epsilon\": }", "bad.json"); }).find("bad.json") != std::string::npos);
  CHECK(error_of([] { parse_text("[1, 2]", "list.json"); }) != "");
}

TEST_CASE("missing parameter files are named") {
  const std::string e = error_of([] { load_file("/nonexistent/params.json"); });
  CHECK(e.find("/nonexistent/params.json") != std::string::npos);
}

TEST_CASE("shipped example config loads") {
  const Settings s = from_json(load_file(std::string(GYRO_SOURCE_DIR) + "/configs/strong_ccw.json"));
  CHECK(s.epsilon == 6000.0);
  CHECK_NOTHROW(physical_params(s));
}

TEST_CASE("help lists every key with its unit") {
  const std::string help = keys_help();
  for (const auto& k : keys()) {
    CHECK(help.find(k.name) != std::string::npos);
    CHECK(help.find("[" + k.unit + "]") != std::string::npos);
    CHECK(!k.unit.empty());
  }
}

TEST_CASE("derived run settings") {
  Settings s;
  const auto sweep = sweep_values(s);
  CHECK(sweep.size() == 61);
  CHECK(sweep.front() == -1.5);
  CHECK(sweep.back() == 1.5);
  const auto actions = baseline_actions(s);
  CHECK(actions.size() == 31);
  CHECK(std::abs(actions[14] + 0.1) < 1e-12);
  const rl::GyroEnvConfig env = env_config(s);
  CHECK(env.omega_grid.size() == 9);
  CHECK(env.omega_grid.front() == -4000.0);
  CHECK(env.n_steps == 10);
  CHECK(env.dtau == 2.0);
  CHECK(env_config(s, 17).omega_grid.size() == 17);
  s.omega_input_unit = OmegaUnit::hz;
  CHECK(env_config(s).omega_grid.back() == doctest::Approx(2.0 * std::numbers::pi * 4000.0));
  const auto so = steady_options(s);
  CHECK(so.t_cap == 200.0);
  CHECK(so.rel_tol == 0.01);
}

TEST_CASE("csv writer") {
  const fs::path dir = scratch("csv");
  {
    io::CsvWriter w((dir / "a.csv").string(), {"x", "name", "n"});
    w << 0.1 << "pure" << 3;
    w.end_row();
    w << 1.0 / 3.0 << std::string("mixed") << -1;
    w.end_row();
    w << 1.0;
    CHECK_THROWS(w.end_row());
  }
  const auto lines = read_lines(dir / "a.csv");
  REQUIRE(lines.size() >= 3);
  CHECK(lines[0] == "x,name,n");
  CHECK(lines[1] == "0.10000000000000001,pure,3");
  std::istringstream row(lines[2]);
  std::string cell;
  std::getline(row, cell, ',');
  CHECK(std::stod(cell) == 1.0 / 3.0);
}

TEST_CASE("trajectory csv") {
  const auto header = io::trajectory_header();
  CHECK(header.size() == 1 + 2 * 2 * (kNumAmplitudes + kNumMoments));
  CHECK(header[0] == "t");
  CHECK(header[1] == "re_alpha_ccw");
  CHECK(header[7] == "re_n_a1");
  CHECK(header[49] == "re_d_alpha_ccw");

  const fs::path dir = scratch("traj");
  Gen g(72);
  std::vector<AugmentedState> states{g.state(1.0), g.state(1.0)};
  states[1].t = 0.5;
  io::write_trajectory_csv((dir / "t.csv").string(), states);
  const auto lines = read_lines(dir / "t.csv");
  REQUIRE(lines.size() == 3);
  std::istringstream row(lines[2]);
  std::vector<double> cells;
  for (std::string c; std::getline(row, c, ',');) cells.push_back(std::stod(c));
  REQUIRE(cells.size() == header.size());
  CHECK(cells[0] == 0.5);
  CHECK(cells[1] == states[1].amps.alpha_ccw.real());
  CHECK(cells[8] == states[1].x[0].imag());
}

TEST_CASE("plot data files") {
  const fs::path dir = scratch("plot");
  const std::vector<double> x{1.0, 2.0}, y{3.0, 4.5};
  io::write_plot_data((dir / "p.dat").string(), "t", "qfi", x, y);
  const auto lines = read_lines(dir / "p.dat");
  REQUIRE(lines.size() == 3);
  CHECK(lines[0].front() == '#');
  CHECK(lines[2].find("4.5") != std::string::npos);
}

TEST_CASE("output directories") {
  const fs::path dir = scratch("dirs");
  CHECK_NOTHROW(io::ensure_directory((dir / "a" / "b").string()));
  CHECK(fs::is_directory(dir / "a" / "b"));
  std::ofstream((dir / "file").string()) << "x";
  CHECK_THROWS_AS(io::ensure_directory((dir / "file" / "sub").string()), ConfigError);
}
