#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "gyroqfi/dynamics.hpp"
#include "gyroqfi/experiments.hpp"
#include "gyroqfi/metrology.hpp"
#include "gyroqfi/model.hpp"
#include "gyroqfi/oracle.hpp"
#include "gyroqfi/rl.hpp"

namespace gyro::config {

using json = nlohmann::json;

/// Every user-settable value, in the units named by its key.
struct Settings {
  double refractive_index = 1.48;
  double mass_kg = 1.0e-11;
  double radius_m = 1.1e-3;
  double wavelength_m = 0.78e-6;
  double omega_m_rad_s = 5.0e7;

  std::optional<double> kappa_over_omega_m = 0.44;
  std::optional<double> kappa_si;
  std::optional<double> gamma_m_over_omega_m = 3.5e-3;
  std::optional<double> gamma_m_si;
  std::optional<double> J_over_omega_m = 0.0;
  std::optional<double> J_over_kappa;
  double epsilon = 2000.0;
  std::optional<double> n_bar_m = 0.0;
  std::optional<double> temperature_k;
  double delta_c_over_omega_m = 0.5;
  DriveDirection drive = DriveDirection::ccw;

  std::optional<double> omega = 2000.0;  // in omega_input_unit
  std::optional<double> omega_hz;
  std::optional<double> omega_rad_s;
  OmegaUnit omega_input_unit = OmegaUnit::rad_per_s;
  RotationSense rotation_sense = RotationSense::ccw_positive;
  std::optional<double> g0_over_omega_m;
  std::optional<double> sagnac_slope;

  InitialPhonons initial_phonons = InitialPhonons::thermal;
  DisplacementFrame displacement_frame = DisplacementFrame::output;
  double integrator_tol = 1e-8;

  double t_end_omega_m = 20.0;
  int samples = 201;

  double sweep_delta_min_over_omega_m = -1.5;
  double sweep_delta_max_over_omega_m = 1.5;
  int sweep_points = 61;

  double steady_t_cap_omega_m = 200.0;
  double steady_window_fraction = 0.1;
  double steady_rel_tol = 0.01;

  std::vector<double> scaling_epsilons{1000.0, 2000.0, 4000.0, 6000.0};

  double band_omega_min = -4000.0;  // in omega_input_unit
  double band_omega_max = 4000.0;
  int band_points = 9;
  int eval_band_points = 17;
  int env_steps = 10;
  double env_dtau_omega_m = 2.0;
  double action_min_over_omega_m = -1.5;
  double action_max_over_omega_m = 1.5;
  double reward_scale = 1e17;
  rl::RewardMode reward_mode = rl::RewardMode::per_step;
  int baseline_points = 31;

  rl::PpoConfig ppo;
  int ppo_iterations = 300;

  oracle::FockConfig fock;
  double oracle_t_end_omega_m = 10.0;
  int oracle_samples = 11;
  double oracle_tolerance = 1e-3;

  std::uint64_t seed = 0;
};

struct KeyInfo {
  std::string name;
  std::string unit;
  std::string help;
};

/// Every accepted key, in documentation order.
const std::vector<KeyInfo>& keys();

/// Help text listing every key with its unit.
std::string keys_help();

/// Parses JSON text with // and /* */ comments ignored. The top level must
/// be an object. Throws ConfigError mentioning `origin` on a syntax error.
json parse_text(const std::string& text, const std::string& origin);

/// Reads and parses a file; ConfigError names the path when it cannot be read.
json load_file(const std::string& path);

/// Applies `key=value` overrides. The value is parsed as JSON when possible
/// and taken as a string otherwise. Setting one member of a key group (e.g.
/// omega / omega_hz / omega_rad_s, or kappa_over_omega_m / kappa_si) removes
/// the others.
json apply_overrides(json base, const std::vector<std::string>& overrides);

/// Strict conversion: unknown keys, wrong types and conflicting groups throw
/// ConfigError naming the key. kappa_over_omega_m wins over kappa_si and
/// gamma_m_over_omega_m over gamma_m_si; the other groups are exclusive.
Settings from_json(const json& j);

/// The full effective settings; from_json(to_json(s)) reproduces s.
json to_json(const Settings& s);

/// Rotation rate in rad/s.
double omega_rad_per_s(const Settings& s);

PhysicalParams physical_params(const Settings& s);
experiments::SteadyOptions steady_options(const Settings& s);
/// Band environment with `points` rotation rates (band_points by default).
rl::GyroEnvConfig env_config(const Settings& s, std::optional<int> points = std::nullopt);
std::vector<double> sweep_values(const Settings& s);
std::vector<double> baseline_actions(const Settings& s);

}  // namespace gyro::config
