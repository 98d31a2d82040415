#include "gyroqfi/config.hpp"

#include <cmath>
#include <algorithm>
#include <fstream>
#include <functional>
#include <sstream>

#include "gyroqfi/errors.hpp"

namespace gyro::config {

namespace {

template <typename E>
struct EnumName {
  E value;
  const char* name;
};

constexpr EnumName<DriveDirection> kDrive[] = {{DriveDirection::ccw, "ccw"},
                                                {DriveDirection::cw, "cw"}};
constexpr EnumName<OmegaUnit> kUnit[] = {{OmegaUnit::hz, "hz"}, {OmegaUnit::rad_per_s, "rad_per_s"}};
constexpr EnumName<RotationSense> kSense[] = {{RotationSense::ccw_positive, "ccw_positive"},
                                              {RotationSense::cw_positive, "cw_positive"}};
constexpr EnumName<InitialPhonons> kPhonons[] = {{InitialPhonons::thermal, "thermal"},
                                                 {InitialPhonons::cold, "cold"}};
constexpr EnumName<DisplacementFrame> kFrame[] = {{DisplacementFrame::output, "output"},
                                                  {DisplacementFrame::intracavity, "intracavity"}};
constexpr EnumName<rl::RewardMode> kReward[] = {{rl::RewardMode::per_step, "per_step"},
                                                {rl::RewardMode::terminal, "terminal"}};

[[noreturn]] void bad(const std::string& key, const std::string& what) {
  throw ConfigError("config key '" + key + "': " + what);
}

double get_double(const std::string& key, const json& v) {
  if (!v.is_number()) bad(key, "expected a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) bad(key, "expected a finite number");
  return x;
}

int get_int(const std::string& key, const json& v) {
  if (!v.is_number_integer()) bad(key, "expected an integer");
  return v.get<int>();
}

std::uint64_t get_u64(const std::string& key, const json& v) {
  if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() && v.get<long long>() < 0))
    bad(key, "expected a non-negative integer");
  return v.get<std::uint64_t>();
}

template <typename E, std::size_t N>
E get_enum(const std::string& key, const json& v, const EnumName<E> (&names)[N]) {
  if (v.is_string())
    for (const auto& n : names)
      if (v.get<std::string>() == n.name) return n.value;
  std::string allowed;
  for (const auto& n : names) allowed += std::string(allowed.empty() ? "" : ", ") + n.name;
  bad(key, "expected one of {" + allowed + "}");
}

template <typename E, std::size_t N>
std::string enum_name(E value, const EnumName<E> (&names)[N]) {
  for (const auto& n : names)
    if (n.value == value) return n.name;
  return "?";
}

template <typename T>
std::vector<T> get_list(const std::string& key, const json& v) {
  if (!v.is_array() || v.empty()) bad(key, "expected a nonempty array");
  std::vector<T> out;
  for (const auto& e : v) {
    if constexpr (std::is_same_v<T, int>)
      out.push_back(get_int(key, e));
    else
      out.push_back(get_double(key, e));
  }
  return out;
}

json opt(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

struct Entry {
  KeyInfo info;
  std::function<void(Settings&, const json&)> set;
  std::function<json(const Settings&)> get;
};

#define GYRO_DOUBLE(key, unit, help)                                                        \
  Entry {                                                                                   \
    {#key, unit, help}, [](Settings& s, const json& v) { s.key = get_double(#key, v); },    \
        [](const Settings& s) { return json(s.key); }                                       \
  }
#define GYRO_OPT(key, unit, help)                                                           \
  Entry {                                                                                   \
    {#key, unit, help}, [](Settings& s, const json& v) { s.key = get_double(#key, v); },    \
        [](const Settings& s) { return opt(s.key); }                                        \
  }
#define GYRO_INT(key, field, unit, help)                                                    \
  Entry {                                                                                   \
    {key, unit, help}, [](Settings& s, const json& v) { s.field = get_int(key, v); },       \
        [](const Settings& s) { return json(s.field); }                                     \
  }
#define GYRO_REAL(key, field, unit, help)                                                   \
  Entry {                                                                                   \
    {key, unit, help}, [](Settings& s, const json& v) { s.field = get_double(key, v); },    \
        [](const Settings& s) { return json(s.field); }                                     \
  }
#define GYRO_ENUM(key, table, help)                                                         \
  Entry {                                                                                   \
    {#key, "enum", help}, [](Settings& s, const json& v) { s.key = get_enum(#key, v, table); }, \
        [](const Settings& s) { return json(enum_name(s.key, table)); }                     \
  }

const std::vector<Entry>& entries() {
  static const std::vector<Entry> table = {
      GYRO_DOUBLE(refractive_index, "1", "resonator refractive index n"),
      GYRO_DOUBLE(mass_kg, "kg", "effective mechanical mass"),
      GYRO_DOUBLE(radius_m, "m", "resonator radius"),
      GYRO_DOUBLE(wavelength_m, "m", "pump wavelength"),
      GYRO_DOUBLE(omega_m_rad_s, "rad/s", "mechanical angular frequency omega_m"),
      GYRO_OPT(kappa_over_omega_m, "omega_m", "optical decay rate (wins over kappa_si)"),
      GYRO_OPT(kappa_si, "rad/s", "optical decay rate"),
      GYRO_OPT(gamma_m_over_omega_m, "omega_m", "mechanical damping rate (wins over gamma_m_si)"),
      GYRO_OPT(gamma_m_si, "rad/s", "mechanical damping rate"),
      GYRO_OPT(J_over_omega_m, "omega_m", "backscattering coupling (excludes J_over_kappa)"),
      GYRO_OPT(J_over_kappa, "kappa", "backscattering coupling (excludes J_over_omega_m)"),
      GYRO_DOUBLE(epsilon, "omega_m", "pump amplitude on the driven mode"),
      GYRO_OPT(n_bar_m, "quanta", "mechanical bath occupation (excludes temperature_k)"),
      GYRO_OPT(temperature_k, "K", "mechanical bath temperature (excludes n_bar_m)"),
      GYRO_DOUBLE(delta_c_over_omega_m, "omega_m", "pump-cavity detuning Delta_c"),
      GYRO_ENUM(drive, kDrive, "driven mode {ccw, cw}"),
      GYRO_OPT(omega, "omega_input_unit", "rotation rate (excludes omega_hz, omega_rad_s)"),
      GYRO_OPT(omega_hz, "Hz", "rotation rate, converted as 2 pi f"),
      GYRO_OPT(omega_rad_s, "rad/s", "rotation rate"),
      GYRO_ENUM(omega_input_unit, kUnit, "unit of omega and band_omega_* {hz, rad_per_s}"),
      GYRO_ENUM(rotation_sense, kSense, "direction counted as positive rotation {ccw_positive, cw_positive}"),
      GYRO_OPT(g0_over_omega_m, "omega_m", "replaces the derived single-photon coupling"),
      GYRO_OPT(sagnac_slope, "1", "replaces the derived Sagnac slope dDelta_F/dOmega"),
      GYRO_ENUM(initial_phonons, kPhonons, "initial mechanical state {thermal, cold}"),
      GYRO_ENUM(displacement_frame, kFrame, "QFI displacement {output, intracavity}"),
      GYRO_DOUBLE(integrator_tol, "1", "adaptive integrator tolerance"),
      GYRO_DOUBLE(t_end_omega_m, "1/omega_m", "simulate: final time"),
      GYRO_INT("samples", samples, "count", "simulate: evenly spaced output samples"),
      GYRO_DOUBLE(sweep_delta_min_over_omega_m, "omega_m", "sweep: first detuning"),
      GYRO_DOUBLE(sweep_delta_max_over_omega_m, "omega_m", "sweep: last detuning"),
      GYRO_INT("sweep_points", sweep_points, "count", "sweep: number of detunings"),
      GYRO_DOUBLE(steady_t_cap_omega_m, "1/omega_m", "steady state: horizon cap"),
      GYRO_DOUBLE(steady_window_fraction, "1", "steady state: trailing window fraction"),
      GYRO_DOUBLE(steady_rel_tol, "1", "steady state: relative change threshold"),
      Entry{{"scaling_epsilons", "omega_m", "scaling: list of pump amplitudes"},
            [](Settings& s, const json& v) { s.scaling_epsilons = get_list<double>("scaling_epsilons", v); },
            [](const Settings& s) { return json(s.scaling_epsilons); }},
      GYRO_DOUBLE(band_omega_min, "omega_input_unit", "band: lowest rotation rate"),
      GYRO_DOUBLE(band_omega_max, "omega_input_unit", "band: highest rotation rate"),
      GYRO_INT("band_points", band_points, "count", "band: rotation rates in the ensemble"),
      GYRO_INT("eval_band_points", eval_band_points, "count", "eval: rotation rates in the evaluation band"),
      GYRO_INT("env_steps", env_steps, "count", "environment: control steps per episode"),
      GYRO_DOUBLE(env_dtau_omega_m, "1/omega_m", "environment: duration of one step"),
      GYRO_DOUBLE(action_min_over_omega_m, "omega_m", "environment: lowest detuning action"),
      GYRO_DOUBLE(action_max_over_omega_m, "omega_m", "environment: highest detuning action"),
      GYRO_DOUBLE(reward_scale, "(rad/s)^-2", "environment: reward = F-bar / reward_scale"),
      GYRO_ENUM(reward_mode, kReward, "environment: {per_step, terminal}"),
      GYRO_INT("baseline_points", baseline_points, "count", "baseline: constant actions on the action range"),
      GYRO_REAL("ppo_clip_epsilon", ppo.clip_epsilon, "1", "PPO clip range"),
      GYRO_REAL("ppo_value_coeff", ppo.value_coeff, "1", "PPO value-loss weight c1"),
      GYRO_REAL("ppo_entropy_coeff", ppo.entropy_coeff, "1", "PPO entropy weight c2"),
      GYRO_REAL("ppo_discount", ppo.discount, "1", "PPO discount"),
      GYRO_REAL("ppo_gae_lambda", ppo.gae_lambda, "1", "PPO GAE lambda"),
      GYRO_REAL("ppo_learning_rate", ppo.learning_rate, "1", "Adam step size"),
      GYRO_INT("ppo_epochs", ppo.epochs_per_update, "count", "PPO epochs per update"),
      GYRO_INT("ppo_minibatch", ppo.minibatch_size, "count", "PPO minibatch size"),
      GYRO_INT("ppo_rollout_episodes", ppo.rollout_episodes, "count", "episodes per update"),
      Entry{{"ppo_hidden_sizes", "count", "hidden layer widths of both networks"},
            [](Settings& s, const json& v) { s.ppo.hidden_sizes = get_list<int>("ppo_hidden_sizes", v); },
            [](const Settings& s) { return json(s.ppo.hidden_sizes); }},
      GYRO_REAL("ppo_max_grad_norm", ppo.max_grad_norm, "1", "gradient-norm clip"),
      GYRO_REAL("ppo_log_std_init", ppo.log_std_init, "ln omega_m", "initial policy log standard deviation"),
      GYRO_INT("ppo_iterations", ppo_iterations, "count", "training iterations"),
      GYRO_INT("fock_n_ccw", fock.n_cav_ccw, "levels", "oracle: ccw mode truncation"),
      GYRO_INT("fock_n_cw", fock.n_cav_cw, "levels", "oracle: cw mode truncation"),
      GYRO_INT("fock_n_mech", fock.n_mech, "levels", "oracle: mechanical truncation"),
      GYRO_REAL("fock_dt_omega_m", fock.dt, "1/omega_m", "oracle: RK4 step"),
      GYRO_REAL("fock_leak_tolerance", fock.leak_tolerance, "1", "oracle: allowed top-level population"),
      GYRO_DOUBLE(oracle_t_end_omega_m, "1/omega_m", "oracle-check: final time"),
      GYRO_INT("oracle_samples", oracle_samples, "count", "oracle-check: compared sample times"),
      GYRO_DOUBLE(oracle_tolerance, "1", "oracle-check: absolute agreement required"),
      Entry{{"seed", "1", "master random seed"},
            [](Settings& s, const json& v) { s.seed = get_u64("seed", v); },
            [](const Settings& s) { return json(s.seed); }},
  };
  return table;
}

#undef GYRO_DOUBLE
#undef GYRO_OPT
#undef GYRO_INT
#undef GYRO_REAL
#undef GYRO_ENUM

// The first key of each group wins when several are given.
const std::vector<std::vector<std::string>>& precedence_groups() {
  static const std::vector<std::vector<std::string>> groups = {
      {"kappa_over_omega_m", "kappa_si"},
      {"gamma_m_over_omega_m", "gamma_m_si"},
  };
  return groups;
}

const std::vector<std::vector<std::string>>& exclusive_groups() {
  static const std::vector<std::vector<std::string>> groups = {
      {"J_over_omega_m", "J_over_kappa"},
      {"n_bar_m", "temperature_k"},
      {"omega", "omega_hz", "omega_rad_s"},
  };
  return groups;
}

const Entry* find(const std::string& key) {
  for (const auto& e : entries())
    if (e.info.name == key) return &e;
  return nullptr;
}

}  // namespace

const std::vector<KeyInfo>& keys() {
  static const std::vector<KeyInfo> out = [] {
    std::vector<KeyInfo> k;
    for (const auto& e : entries()) k.push_back(e.info);
    return k;
  }();
  return out;
}

std::string keys_help() {
  std::ostringstream os;
  os << "Config keys (JSON object; // and /* */ comments allowed):\n";
  for (const auto& k : keys()) {
    os << "  " << k.name;
    for (std::size_t i = k.name.size(); i < 30; ++i) os << ' ';
    os << "[" << k.unit << "] " << k.help << "\n";
  }
  return os.str();
}

json parse_text(const std::string& text, const std::string& origin) {
  json j;
  try {
    j = json::parse(text, nullptr, true, true);
  } catch (const json::parse_error& e) {
    throw ConfigError(origin + ": invalid JSON: " + e.what());
  }
  if (!j.is_object()) throw ConfigError(origin + ": top level must be a JSON object");
  return j;
}

json load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read params file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_text(ss.str(), path);
}

json apply_overrides(json base, const std::vector<std::string>& overrides) {
  for (const auto& o : overrides) {
    const auto eq = o.find('=');
    if (eq == std::string::npos || eq == 0)
      throw ConfigError("override '" + o + "' is not of the form key=value");
    const std::string key = o.substr(0, eq);
    const std::string text = o.substr(eq + 1);
    if (!find(key)) throw ConfigError("unknown config key '" + key + "'");
    json value;
    try {
      value = json::parse(text);
    } catch (const json::parse_error&) {
      value = text;
    }
    for (const auto* groups : {&precedence_groups(), &exclusive_groups()})
      for (const auto& g : *groups)
        if (std::find(g.begin(), g.end(), key) != g.end())
          for (const auto& other : g) base.erase(other);
    base[key] = value;
  }
  return base;
}

Settings from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!find(it.key())) throw ConfigError("unknown config key '" + it.key() + "'");

  Settings s;
  for (const auto* groups : {&precedence_groups(), &exclusive_groups()})
  for (const auto& g : *groups) {
    std::vector<std::string> present;
    for (const auto& k : g)
      if (j.contains(k) && !j[k].is_null()) present.push_back(k);
    if (present.size() > 1 && groups == &exclusive_groups())
      throw ConfigError("config keys '" + present[0] + "' and '" + present[1] +
                        "' are mutually exclusive");
    if (!present.empty()) {
      if (g[0] == "kappa_over_omega_m") s.kappa_over_omega_m.reset(), s.kappa_si.reset();
      if (g[0] == "gamma_m_over_omega_m") s.gamma_m_over_omega_m.reset(), s.gamma_m_si.reset();
      if (g[0] == "J_over_omega_m") s.J_over_omega_m.reset(), s.J_over_kappa.reset();
      if (g[0] == "n_bar_m") s.n_bar_m.reset(), s.temperature_k.reset();
      if (g[0] == "omega") s.omega.reset(), s.omega_hz.reset(), s.omega_rad_s.reset();
    }
  }
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (it.value().is_null()) continue;
    find(it.key())->set(s, it.value());
  }
  return s;
}

json to_json(const Settings& s) {
  json j = json::object();
  for (const auto& e : entries()) {
    json v = e.get(s);
    if (!v.is_null()) j[e.info.name] = v;
  }
  return j;
}

double omega_rad_per_s(const Settings& s) {
  if (s.omega_rad_s) return *s.omega_rad_s;
  if (s.omega_hz) return to_rad_per_s(*s.omega_hz, OmegaUnit::hz);
  if (s.omega) return to_rad_per_s(*s.omega, s.omega_input_unit);
  return 0.0;
}

PhysicalParams physical_params(const Settings& s) {
  PhysicalParams p;
  p.refractive_index = s.refractive_index;
  p.mass_kg = s.mass_kg;
  p.radius_m = s.radius_m;
  p.wavelength_m = s.wavelength_m;
  p.omega_m_si = s.omega_m_rad_s;
  if (!(p.omega_m_si > 0.0)) throw ConfigError("config key 'omega_m_rad_s': must be positive");
  p.kappa = s.kappa_over_omega_m ? *s.kappa_over_omega_m : to_omega_m_units(p, s.kappa_si.value_or(0.0));
  p.gamma_m = s.gamma_m_over_omega_m ? *s.gamma_m_over_omega_m
                                     : to_omega_m_units(p, s.gamma_m_si.value_or(0.0));
  p.backscatter_J = s.J_over_kappa ? *s.J_over_kappa * p.kappa : s.J_over_omega_m.value_or(0.0);
  p.epsilon = s.epsilon;
  if (s.temperature_k) {
    if (*s.temperature_k < 0.0) throw ConfigError("config key 'temperature_k': must be >= 0");
    p.n_bar_m = thermal_occupation(p.omega_m_si, *s.temperature_k);
  } else {
    p.n_bar_m = s.n_bar_m.value_or(0.0);
  }
  p.delta_c = s.delta_c_over_omega_m;
  p.drive = s.drive;
  p.omega = omega_rad_per_s(s);
  p.rotation_sense = s.rotation_sense;
  p.g0_override = s.g0_over_omega_m;
  p.sagnac_slope_override = s.sagnac_slope;
  p.validate();
  return p;
}

experiments::SteadyOptions steady_options(const Settings& s) {
  experiments::SteadyOptions o;
  o.run.tol = s.integrator_tol;
  o.run.phonons = s.initial_phonons;
  o.run.frame = s.displacement_frame;
  o.t_cap = s.steady_t_cap_omega_m;
  o.window_fraction = s.steady_window_fraction;
  o.rel_tol = s.steady_rel_tol;
  if (!(o.t_cap > 0.0)) throw ConfigError("config key 'steady_t_cap_omega_m': must be positive");
  if (!(o.window_fraction > 0.0 && o.window_fraction < 1.0))
    throw ConfigError("config key 'steady_window_fraction': must lie in (0, 1)");
  if (!(o.rel_tol > 0.0)) throw ConfigError("config key 'steady_rel_tol': must be positive");
  return o;
}

rl::GyroEnvConfig env_config(const Settings& s, std::optional<int> points) {
  rl::GyroEnvConfig c;
  c.params = physical_params(s);
  const int n = points.value_or(s.band_points);
  if (s.band_points < 1) throw ConfigError("config key 'band_points': must be >= 1");
  if (s.eval_band_points < 1) throw ConfigError("config key 'eval_band_points': must be >= 1");
  if (!(s.band_omega_max > s.band_omega_min) && n > 1)
    throw ConfigError("config key 'band_omega_max': must exceed band_omega_min");
  for (double w : rl::linspace(s.band_omega_min, s.band_omega_max, n))
    c.omega_grid.push_back(to_rad_per_s(w, s.omega_input_unit));
  c.n_steps = s.env_steps;
  c.dtau = s.env_dtau_omega_m;
  c.action_low = s.action_min_over_omega_m;
  c.action_high = s.action_max_over_omega_m;
  c.reward_scale = s.reward_scale;
  c.reward_mode = s.reward_mode;
  c.tol = s.integrator_tol;
  c.initial_phonons = s.initial_phonons;
  c.frame = s.displacement_frame;
  c.validate();
  return c;
}

std::vector<double> sweep_values(const Settings& s) {
  if (s.sweep_points < 2) throw ConfigError("config key 'sweep_points': must be >= 2");
  if (!(s.sweep_delta_max_over_omega_m > s.sweep_delta_min_over_omega_m))
    throw ConfigError("config key 'sweep_delta_max_over_omega_m': must exceed the minimum");
  return rl::linspace(s.sweep_delta_min_over_omega_m, s.sweep_delta_max_over_omega_m,
                      s.sweep_points);
}

std::vector<double> baseline_actions(const Settings& s) {
  if (s.baseline_points < 2) throw ConfigError("config key 'baseline_points': must be >= 2");
  return rl::linspace(s.action_min_over_omega_m, s.action_max_over_omega_m, s.baseline_points);
}

}  // namespace gyro::config
