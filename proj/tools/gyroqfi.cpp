#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "gyroqfi/checks.hpp"
#include "gyroqfi/config.hpp"
#include "gyroqfi/errors.hpp"
#include "gyroqfi/experiments.hpp"
#include "gyroqfi/integrator.hpp"
#include "gyroqfi/io.hpp"
#include "gyroqfi/oracle.hpp"
#include "gyroqfi/rl.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace gyro;

namespace {

struct RunConfig {
  std::string command;
  std::string params_file;
  std::vector<std::string> overrides;
  std::string output_dir = ".";
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  std::string policy_file;
  bool plot_data = false;
};

/// A check the command itself evaluates (oracle-check, selftest) did not pass.
class CheckFailed : public Error {
 public:
  using Error::Error;
};

struct Context {
  const RunConfig& run;
  config::Settings settings;
  json effective;
  int threads = 1;
  std::string stem;
  json results = json::object();
  std::vector<std::string> outputs;

  std::string path(const std::string& name) {
    const std::string p = (fs::path(run.output_dir) / name).string();
    outputs.push_back(p);
    return p;
  }
};

int resolve_threads(const std::optional<int>& flag) {
  if (flag) return *flag;
  if (const char* env = std::getenv("GYRO_QFI_THREADS")) {
    try {
      const int n = std::stoi(env);
      if (n >= 1) return n;
    } catch (const std::exception&) {
    }
    throw ConfigError(std::string("GYRO_QFI_THREADS must be a positive integer, got '") + env + "'");
  }
  return 1;
}

std::string number_tag(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

json derived_block(const PhysicalParams& p) {
  const DerivedRates d = derived_rates(p);
  return {{"kappa_over_omega_m", p.kappa},
          {"gamma_m_over_omega_m", p.gamma_m},
          {"J_over_omega_m", p.backscatter_J},
          {"n_bar_m", p.n_bar_m},
          {"omega_rad_s", p.omega},
          {"omega_c_rad_s", d.omega_c},
          {"g0_over_omega_m", d.g0},
          {"sagnac_slope", d.sagnac_slope},
          {"detuning_slope_ccw_per_rad_s", detuning_slope(p, Mode::ccw)}};
}

void plot(Context& c, const std::string& name, const std::string& xl, const std::string& yl,
          const std::vector<double>& x, const std::vector<double>& y) {
  if (c.run.plot_data) io::write_plot_data(c.path(name), xl, yl, x, y);
}

// simulate -------------------------------------------------------------------

void cmd_simulate(Context& c) {
  const PhysicalParams p = config::physical_params(c.settings);
  experiments::RunOptions ro{c.settings.integrator_tol, c.settings.initial_phonons,
                             c.settings.displacement_frame};
  const auto run = experiments::run_qfi_dynamics(p, c.settings.t_end_omega_m, c.settings.samples, ro);

  const std::string name = c.stem + "_" + (p.drive == DriveDirection::ccw ? "ccw" : "cw") + "_eps" +
                           number_tag(p.epsilon);
  c.stem = name;
  io::write_trajectory_csv(c.path(name + ".csv"), run.trajectory.samples);

  io::CsvWriter w(c.path(name + "_qfi.csv"), {"t", "qfi", "delta_omega", "delta_omega_over_omega_m",
                                                "n_photons", "n_phonons", "branch"});
  std::vector<double> t, f, np, nb, dw;
  for (const auto& d : run.points) {
    w << d.t << d.qfi << d.precision << d.precision / p.omega_m_si << d.n_photons << d.n_phonons
      << to_string(d.branch);
    w.end_row();
    t.push_back(d.t);
    f.push_back(d.qfi);
    np.push_back(d.n_photons);
    nb.push_back(d.n_phonons);
    dw.push_back(d.precision / p.omega_m_si);
  }
  plot(c, name + "_qfi.dat", "t", "qfi", t, f);
  plot(c, name + "_n_photons.dat", "t", "n_photons", t, np);
  plot(c, name + "_n_phonons.dat", "t", "n_phonons", t, nb);
  plot(c, name + "_delta_omega.dat", "t", "delta_omega_over_omega_m", t, dw);

  const auto& last = run.points.back();
  c.results = {{"final_qfi", last.qfi},
               {"final_delta_omega_rad_s", last.precision},
               {"final_n_photons", last.n_photons},
               {"final_n_phonons", last.n_phonons},
               {"integrator_steps", run.trajectory.stats.accepted}};
  std::printf("t = %g: F = %.6e (rad/s)^-2, DeltaOmega = %.6e rad/s, N_p = %.6e\n", last.t, last.qfi,
              last.precision, last.n_photons);
}

// sweep ----------------------------------------------------------------------

void cmd_sweep(Context& c) {
  const PhysicalParams p = config::physical_params(c.settings);
  const auto deltas = config::sweep_values(c.settings);
  const auto pts = experiments::run_detuning_sweep(p, deltas, config::steady_options(c.settings), c.threads);

  io::CsvWriter w(c.path(c.stem + "_sweep.csv"),
                  {"Omega_hz", "Delta_c_over_omega_m", "qfi", "delta_omega_min", "branch", "status",
                   "t_reached", "n_photons", "n_phonons"});
  const double omega_hz = from_rad_per_s(p.omega, OmegaUnit::hz);
  std::vector<double> dc, dw;
  int best = 0, failed = 0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const auto& pt = pts[i];
    w << omega_hz << pt.delta_c << pt.qfi << pt.precision << to_string(pt.branch)
      << experiments::to_string(pt.status) << pt.t_reached << pt.n_photons << pt.n_phonons;
    w.end_row();
    dc.push_back(pt.delta_c);
    dw.push_back(pt.precision / p.omega_m_si);
    if (pt.status == experiments::PointStatus::failed) ++failed;
    if (pt.precision < pts[best].precision) best = static_cast<int>(i);
  }
  plot(c, c.stem + "_sweep_delta_omega.dat", "Delta_c_over_omega_m", "delta_omega_over_omega_m", dc, dw);

  const auto minima = experiments::local_minima(dw);
  c.results = {{"best_delta_c_over_omega_m", pts[best].delta_c},
               {"min_delta_omega_rad_s", pts[best].precision},
               {"min_delta_omega_over_omega_m", pts[best].precision / p.omega_m_si},
               {"local_minima", minima.size()},
               {"double_minimum", experiments::has_double_minimum(dw)},
               {"failed_points", failed}};
  std::printf("min DeltaOmega/omega_m = %.4e at Delta_c/omega_m = %.3f (%zu local minima, %d failed)\n",
              pts[best].precision / p.omega_m_si, pts[best].delta_c, minima.size(), failed);
}

// scaling --------------------------------------------------------------------

void cmd_scaling(Context& c) {
  const PhysicalParams p = config::physical_params(c.settings);
  const auto res = experiments::run_scaling_study(p, c.settings.scaling_epsilons,
                                                  config::steady_options(c.settings), c.threads);
  io::CsvWriter w(c.path(c.stem + "_scaling.csv"),
                  {"epsilon", "n_photons", "n_phonons", "qfi", "qfi_over_resources", "status"});
  std::vector<double> np, f;
  for (const auto& pt : res.points) {
    w << pt.epsilon << pt.n_photons << pt.n_phonons << pt.qfi << pt.qfi / (pt.n_photons + pt.n_phonons)
      << experiments::to_string(pt.status);
    w.end_row();
    np.push_back(pt.n_photons);
    f.push_back(pt.qfi);
  }
  plot(c, c.stem + "_scaling.dat", "n_photons", "qfi", np, f);
  c.results = {{"loglog_slope", res.slope}};
  std::printf("d ln F / d ln N_p = %.4f\n", res.slope);
}

// baseline -------------------------------------------------------------------

void write_trace(Context& c, const std::string& name, const rl::PolicyEvaluation& ev) {
  io::CsvWriter w(c.path(name), {"step", "t", "action", "average_qfi", "mean_delta_omega"});
  for (std::size_t k = 0; k < ev.times.size(); ++k) {
    w << static_cast<int>(k) << ev.times[k];
    if (k == 0)
      w << "";
    else
      w << ev.actions[k - 1];
    w << ev.average_qfi[k] << ev.mean_precision[k];
    w.end_row();
  }
}

void cmd_baseline(Context& c) {
  const auto cfg = config::env_config(c.settings);
  const auto actions = config::baseline_actions(c.settings);
  const auto res = experiments::run_fixed_detuning_baseline(cfg, actions, c.threads);

  io::CsvWriter w(c.path(c.stem + "_baseline.csv"), {"Delta_c_over_omega_m", "max_average_qfi", "t_at_max"});
  std::vector<double> a, f;
  for (const auto& pt : res.points) {
    w << pt.action << pt.max_average_qfi << pt.t_at_max;
    w.end_row();
    a.push_back(pt.action);
    f.push_back(pt.max_average_qfi);
  }
  write_trace(c, c.stem + "_baseline_best.csv", res.best_trace);
  plot(c, c.stem + "_baseline.dat", "Delta_c_over_omega_m", "max_average_qfi", a, f);
  const auto& best = res.points[res.best_index];
  c.results = {{"best_delta_c_over_omega_m", best.action}, {"best_max_average_qfi", best.max_average_qfi}};
  std::printf("best constant Delta_c/omega_m = %.3f, max F-bar = %.6e\n", best.action, best.max_average_qfi);
}

// train / eval ---------------------------------------------------------------

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write '" + path + "'");
  out << text << '\n';
}

void cmd_train(Context& c) {
  rl::GyroEnv env(config::env_config(c.settings));
  rl::PpoConfig pc = c.settings.ppo;
  pc.seed = c.settings.seed;
  rl::TrainOptions opts;
  opts.iterations = c.settings.ppo_iterations;
  opts.threads = c.threads;
  opts.on_iteration = [](const rl::CurveRow& r) {
    if (r.iteration % 10 == 0 || r.iteration == 1) {
      std::printf("iteration %d: eval_return %.5f, mean_reward %.5f, eval F-bar %.6e\n", r.iteration,
                  r.eval_return, r.mean_reward, r.eval_best_average_qfi);
      std::fflush(stdout);
    }
  };
  const auto res = rl::train(env, pc, opts);

  write_text(c.path("policy.json"), rl::snapshot_to_json(res.best));
  write_text(c.path("policy_last.json"), rl::snapshot_to_json(res.last));
  io::CsvWriter w(c.path("learning_curve.csv"),
                  {"iteration", "eval_return", "mean_reward", "policy_loss", "value_loss", "entropy",
                   "eval_best_average_qfi", "eval_mean_action"});
  std::vector<double> it, ret;
  for (const auto& r : res.curve) {
    w << r.iteration << r.eval_return << r.mean_reward << r.policy_loss << r.value_loss << r.entropy
      << r.eval_best_average_qfi << r.eval_mean_action;
    w.end_row();
    it.push_back(r.iteration);
    ret.push_back(r.eval_return);
  }
  plot(c, "learning_curve.dat", "iteration", "eval_return", it, ret);

  rl::GyroEnv eval_env(config::env_config(c.settings, c.settings.eval_band_points));
  eval_env.set_reward_scale(res.best.reward_scale);
  const auto ev = rl::evaluate_policy(res.best.model, eval_env);
  write_trace(c, c.stem + "_train_eval.csv", ev);
  const auto [fmax, tmax] = experiments::max_average_qfi(ev);
  c.results = {{"best_iteration", res.best.iterations},
               {"best_eval_return", res.best.eval_return},
               {"best_eval_average_qfi", res.best_eval_average_qfi},
               {"policy_max_average_qfi", fmax},
               {"policy_t_at_max", tmax},
               {"reward_scale", res.best.reward_scale}};
  std::printf("best policy (iteration %d): max F-bar = %.6e on the evaluation band; "
              "best F-bar over training = %.6e\n",
              res.best.iterations, fmax, res.best_eval_average_qfi);
}

void cmd_eval(Context& c) {
  if (c.run.policy_file.empty()) throw ConfigError("eval requires --policy <file>");
  std::ifstream in(c.run.policy_file);
  if (!in) throw ConfigError("cannot read policy file '" + c.run.policy_file + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  const rl::PolicySnapshot snap = rl::snapshot_from_json(ss.str());

  auto cfg = config::env_config(c.settings, c.settings.eval_band_points);
  cfg.reward_scale = snap.reward_scale;
  rl::GyroEnv env(cfg);
  if (snap.model.actor.sizes().front() != env.observation_size())
    throw ConfigError("policy observation size does not match the environment");
  const auto ev = rl::evaluate_policy(snap.model, env);
  write_trace(c, c.stem + "_eval.csv", ev);
  plot(c, c.stem + "_eval.dat", "t", "average_qfi", ev.times, ev.average_qfi);
  const auto [fmax, tmax] = experiments::max_average_qfi(ev);
  c.results = {{"max_average_qfi", fmax}, {"t_at_max", tmax}, {"total_reward", ev.total_reward}};
  std::printf("max F-bar = %.6e at t = %g, total reward %.6f\n", fmax, tmax, ev.total_reward);
}

// oracle-check ---------------------------------------------------------------

void cmd_oracle_check(Context& c) {
  const PhysicalParams p = config::physical_params(c.settings);
  const auto& s = c.settings;
  if (s.oracle_samples < 2) throw ConfigError("config key 'oracle_samples': must be >= 2");
  if (!(s.oracle_t_end_omega_m > 0.0)) throw ConfigError("config key 'oracle_t_end_omega_m': must be > 0");
  const auto times = rl::linspace(0.0, s.oracle_t_end_omega_m, s.oracle_samples);
  const auto schedule = DetuningSchedule::constant(p.delta_c);

  const oracle::FockSolver fock(p, s.fock);
  const auto ref = fock.evolve(fock.initial_state(s.initial_phonons), schedule, s.oracle_t_end_omega_m, times);
  const Trajectory mom = integrate(initial_state(p, s.initial_phonons), DynamicsContext(p), schedule,
                                   s.oracle_t_end_omega_m, s.integrator_tol, times);
  const auto ref_states = oracle::to_states(ref);
  io::write_trajectory_csv(c.path(c.stem + "_oracle_fock.csv"), ref_states);
  io::write_trajectory_csv(c.path(c.stem + "_oracle_moments.csv"), mom.samples);

  double worst = 0.0, t_worst = 0.0;
  for (std::size_t k = 0; k < ref.size() && k < mom.samples.size(); ++k) {
    const auto& a = ref_states[k];
    const auto& b = mom.samples[k];
    double d = std::max({std::abs(a.amps.alpha_ccw - b.amps.alpha_ccw),
                         std::abs(a.amps.alpha_cw - b.amps.alpha_cw), std::abs(a.amps.beta - b.amps.beta)});
    for (int i = 0; i < kNumMoments; ++i) d = std::max(d, std::abs(a.x[i] - b.x[i]));
    if (d > worst) worst = d, t_worst = a.t;
  }
  const bool pass = worst < s.oracle_tolerance;
  c.results = {{"max_abs_deviation", worst}, {"t_of_max", t_worst}, {"pass", pass}};
  std::printf("%s max |deviation| = %.4e at t = %g (tolerance %.1e)\n", pass ? "PASS" : "FAIL", worst,
              t_worst, s.oracle_tolerance);
  if (!pass) throw CheckFailed("oracle deviation exceeds oracle_tolerance");
}

// selftest -------------------------------------------------------------------

void cmd_selftest(Context& c) {
  checks::OracleCase oc;
  oc.t_end = 3.0;
  oc.samples = 7;
  const std::vector<checks::CheckResult> results = {
      checks::linear_cavity_qfi(),
      checks::thermal_relaxation(),
      checks::sensitivity_finite_difference(),
      checks::oracle_equivalence(oc),
      checks::ppo_bandit(1, 500),
  };
  int failures = 0;
  json list = json::array();
  for (const auto& r : results) {
    std::printf("%s  %s: %s (%.1f s)\n", r.pass ? "PASS" : "FAIL", r.name.c_str(), r.detail.c_str(), r.seconds);
    list.push_back({{"name", r.name}, {"pass", r.pass}, {"detail", r.detail}, {"seconds", r.seconds}});
    if (!r.pass) ++failures;
  }
  c.results = {{"checks", list}, {"failures", failures}};
  if (failures) throw CheckFailed(std::to_string(failures) + " selftest check(s) failed");
}

void write_manifest(Context& c, const std::string& command, const json& input, double seconds) {
  json m;
  m["command"] = command;
  m["params_file"] = c.run.params_file;
  m["overrides"] = c.run.overrides;
  m["input"] = input;
  m["effective_parameters"] = c.effective;
  try {
    m["derived"] = derived_block(config::physical_params(c.settings));
  } catch (const ConfigError&) {
  }
  m["git_revision"] = io::git_revision();
  m["seed"] = c.settings.seed;
  m["threads"] = c.threads;
  m["wall_time_s"] = seconds;
  m["outputs"] = c.outputs;
  m["results"] = c.results;
  const std::string suffix = command == "simulate" ? "" : "_" + command;
  const std::string path = (fs::path(c.run.output_dir) / (c.stem + suffix + "_manifest.json")).string();
  io::write_json(path, m);
  std::printf("manifest: %s\n", path.c_str());
}

int dispatch(const RunConfig& run) {
  json input = json::object();
  std::optional<Context> ctx_holder;
  std::string diag_dir = run.output_dir;
  try {
    if (!run.params_file.empty()) input = config::load_file(run.params_file);
    input = config::apply_overrides(input, run.overrides);
    if (run.seed) input["seed"] = *run.seed;
    Context& ctx = ctx_holder.emplace(
        Context{run, config::from_json(input), json(), resolve_threads(run.threads), "", json::object(), {}});
    ctx.effective = config::to_json(ctx.settings);
    ctx.stem = run.params_file.empty() ? "gyroqfi" : fs::path(run.params_file).stem().string();
    io::ensure_directory(run.output_dir);

    const auto t0 = std::chrono::steady_clock::now();
    const std::string& cmd = run.command;
    if (cmd == "simulate") cmd_simulate(ctx);
    else if (cmd == "sweep") cmd_sweep(ctx);
    else if (cmd == "scaling") cmd_scaling(ctx);
    else if (cmd == "baseline") cmd_baseline(ctx);
    else if (cmd == "train") cmd_train(ctx);
    else if (cmd == "eval") cmd_eval(ctx);
    else if (cmd == "oracle-check") cmd_oracle_check(ctx);
    else if (cmd == "selftest") cmd_selftest(ctx);
    write_manifest(ctx, cmd, input,
                   std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    return 0;
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const Error& e) {
    json d{{"command", run.command},
           {"error_type", dynamic_cast<const CheckFailed*>(&e) ? "check_failed" : "numerical_failure"},
           {"message", e.what()},
           {"input", input}};
    if (ctx_holder) {
      d["effective_parameters"] = ctx_holder->effective;
      d["results"] = ctx_holder->results;
    }
    std::error_code ec;
    fs::create_directories(diag_dir, ec);
    std::string path = (fs::path(diag_dir) / "diagnostics.json").string();
    try {
      io::write_json(path, d);
    } catch (const Error&) {
      path = "diagnostics.json";
      io::write_json(path, d);
    }
    std::fprintf(stderr, "error: %s\ndiagnostics: %s\n", e.what(), path.c_str());
    return 2;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Quantum Fisher information of a spinning optomechanical gyroscope"};
  app.require_subcommand(1);
  app.footer("\n" + config::keys_help() +
             "\nExit codes: 0 success, 1 invalid input, 2 numerical failure (see diagnostics.json).\n"
             "GYRO_QFI_THREADS sets the thread count when --threads is absent.");

  RunConfig run;
  const std::vector<std::pair<std::string, std::string>> commands = {
      {"simulate", "QFI, photon and phonon dynamics at a constant detuning"},
      {"sweep", "steady-state precision against the pump-cavity detuning"},
      {"scaling", "steady QFI against photon number over scaling_epsilons"},
      {"baseline", "best constant detuning for the band-averaged QFI"},
      {"train", "PPO training of a detuning schedule"},
      {"eval", "evaluate a saved policy (requires --policy)"},
      {"oracle-check", "compare the moment solver with the Fock-space master equation"},
      {"selftest", "analytic and oracle checks, one PASS/FAIL line each"},
  };
  for (const auto& [name, help] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--params", run.params_file, "JSON config file");
    sub->add_option("--override", run.overrides, "key=value, repeatable; value parsed as JSON or string");
    sub->add_option("--output-dir", run.output_dir, "directory for CSV, JSON and plot files");
    sub->add_option("--seed", run.seed, "random seed (overrides the 'seed' key)");
    sub->add_option("--threads", run.threads, "worker threads")->check(CLI::PositiveNumber);
    sub->add_flag("--plot-data", run.plot_data, "also write two-column gnuplot files");
    sub->footer(app.get_footer());
    if (name == "eval") sub->add_option("--policy", run.policy_file, "policy snapshot JSON");
    sub->callback([&run, n = name] { run.command = n; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }
  return dispatch(run);
}
