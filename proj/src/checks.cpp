#include "gyroqfi/checks.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "gyroqfi/errors.hpp"
#include "gyroqfi/experiments.hpp"
#include "gyroqfi/integrator.hpp"
#include "gyroqfi/metrology.hpp"
#include "gyroqfi/oracle.hpp"
#include "gyroqfi/parallel.hpp"
#include "gyroqfi/rl.hpp"

namespace gyro::checks {

namespace {

using clock = std::chrono::steady_clock;

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

template <typename Fn>
CheckResult timed(const std::string& name, Fn&& fn) {
  const auto t0 = clock::now();
  CheckResult r;
  r.name = name;
  try {
    fn(r);
  } catch (const std::exception& e) {
    r.pass = false;
    r.detail = std::string("error: ") + e.what();
  }
  r.seconds = std::chrono::duration<double>(clock::now() - t0).count();
  return r;
}

double rel_change(cd a, cd b) { return std::abs(a - b) / std::abs(b); }

PhysicalParams strong_drive(double epsilon, double J_over_kappa) {
  PhysicalParams p;
  p.epsilon = epsilon;
  p.delta_c = 0.5;
  p.omega = 2000.0;
  p.backscatter_J = J_over_kappa * p.kappa;
  return p;
}

experiments::SteadyOptions steady_defaults() { return experiments::SteadyOptions{}; }

}  // namespace

CheckResult linear_cavity_qfi(double rel_tol) {
  return timed("linear-cavity QFI", [&](CheckResult& r) {
    double worst = 0.0;
    for (double omega : {2000.0, -3000.0, 12000.0}) {
      PhysicalParams p;
      p.g0_override = 0.0;
      p.epsilon = 50.0;
      p.delta_c = 0.3;
      p.omega = omega;
      const DynamicsContext ctx(p);
      const AugmentedState s = advance_constant(initial_state(p), ctx, p.delta_c, 200.0, 1e-11);
      const double f = state_qfi(s, p).value;

      const double slope = detuning_slope(p, Mode::ccw);
      const cd z(0.5 * p.kappa, p.delta_c + slope * omega);
      const cd d_alpha = -cd(0.0, slope) * p.epsilon / (z * z);
      const double expected = 4.0 * p.kappa * std::norm(d_alpha);
      worst = std::max(worst, std::abs(f - expected) / expected);
    }
    r.pass = worst < rel_tol;
    r.detail = "max relative deviation " + fmt("%.3e", worst);
  });
}

CheckResult thermal_relaxation(double rel_tol) {
  return timed("thermal relaxation", [&](CheckResult& r) {
    PhysicalParams p;
    p.epsilon = 0.0;
    p.n_bar_m = 5.0;
    const std::vector<double> times = rl::linspace(50.0, 1000.0, 20);
    const Trajectory tr = integrate(initial_state(p, InitialPhonons::cold), DynamicsContext(p),
                                    DetuningSchedule::constant(p.delta_c), 1000.0, 1e-12, times);
    double worst = 0.0;
    int compared = 0;
    for (const auto& s : tr.samples) {
      if (s.t == 0.0) continue;
      const double expected = 5.0 * (1.0 - std::exp(-p.gamma_m * s.t));
      worst = std::max(worst, std::abs(s.x[moment::n_b].real() - expected) / expected);
      ++compared;
    }
    r.pass = compared == 20 && worst < rel_tol;
    r.detail = std::to_string(compared) + " samples, max relative deviation " + fmt("%.3e", worst);
  });
}

CheckResult oracle_equivalence(const OracleCase& c) {
  return timed("Fock-oracle equivalence", [&](CheckResult& r) {
    PhysicalParams p;
    p.g0_override = c.g0;
    p.epsilon = c.epsilon;
    p.omega = c.omega;
    p.n_bar_m = 0.0;
    oracle::FockConfig cfg;
    cfg.n_cav_ccw = cfg.n_cav_cw = cfg.n_mech = c.n_levels;
    const std::vector<double> times = rl::linspace(0.0, c.t_end, c.samples);
    const auto schedule = DetuningSchedule::constant(p.delta_c);

    const oracle::FockSolver fock(p, cfg);
    const auto ref = fock.evolve(fock.initial_state(), schedule, c.t_end, times);
    const Trajectory mom = integrate(initial_state(p), DynamicsContext(p), schedule, c.t_end, 1e-10, times);
    if (ref.size() != mom.samples.size()) throw std::logic_error("sample grids differ");

    double worst = 0.0;
    for (std::size_t k = 0; k < ref.size(); ++k) {
      const auto& a = ref[k];
      const auto& b = mom.samples[k];
      worst = std::max({worst, std::abs(a.amps.alpha_ccw - b.amps.alpha_ccw),
                        std::abs(a.amps.alpha_cw - b.amps.alpha_cw), std::abs(a.amps.beta - b.amps.beta)});
      for (int i = 0; i < kNumMoments; ++i) worst = std::max(worst, std::abs(a.x[i] - b.x[i]));
    }
    r.pass = worst < c.tol;
    r.detail = "max |deviation| over 24 expectations " + fmt("%.3e", worst) + " at " +
               std::to_string(ref.size()) + " times";
  });
}

CheckResult sensitivity_finite_difference(double rel_tol) {
  return timed("sensitivity vs finite differences", [&](CheckResult& r) {
    PhysicalParams p = strong_drive(2000.0, 0.0);
    const double t_end = 20.0, tol = 1e-12;
    const auto run = [&](double omega) {
      PhysicalParams q = p;
      q.omega = omega;
      return advance_constant(initial_state(q), DynamicsContext(q), q.delta_c, t_end, tol);
    };
    const double h = 1e-3 * p.omega;
    const AugmentedState s = run(p.omega);
    const AugmentedState up = run(p.omega + h);
    const AugmentedState dn = run(p.omega - h);

    double worst = 0.0;
    int compared = 0;
    const auto compare = [&](cd analytic, cd plus, cd minus) {
      const cd fd = (plus - minus) / (2.0 * h);
      if (std::abs(analytic) <= 1e-6) return;
      worst = std::max(worst, rel_change(fd, analytic));
      ++compared;
    };
    compare(s.d_amps.alpha_ccw, up.amps.alpha_ccw, dn.amps.alpha_ccw);
    compare(s.d_amps.alpha_cw, up.amps.alpha_cw, dn.amps.alpha_cw);
    compare(s.d_amps.beta, up.amps.beta, dn.amps.beta);
    for (int i = 0; i < kNumMoments; ++i) compare(s.dx[i], up.x[i], dn.x[i]);
    r.pass = compared > 0 && worst < rel_tol;
    r.detail = std::to_string(compared) + " entries, max relative deviation " + fmt("%.3e", worst);
  });
}

CheckResult nonreciprocity(int threads) {
  return timed("nonreciprocity", [&](CheckResult& r) {
    struct Case {
      OmegaUnit unit;
      DriveDirection drive;
    };
    const Case cases[] = {{OmegaUnit::rad_per_s, DriveDirection::ccw},
                          {OmegaUnit::rad_per_s, DriveDirection::cw},
                          {OmegaUnit::hz, DriveDirection::ccw},
                          {OmegaUnit::hz, DriveDirection::cw}};
    experiments::SteadyPoint pts[4];
    parallel_for(4, threads, [&](int i, int) {
      PhysicalParams p = strong_drive(6000.0, 0.0);
      p.omega = to_rad_per_s(2000.0, cases[i].unit);
      p.drive = cases[i].drive;
      pts[i] = experiments::steady_state(p, steady_defaults());
    });
    for (const auto& pt : pts)
      if (pt.status == experiments::PointStatus::failed) throw NonFinite(pt.message);
    const double ratio_default = pts[0].qfi / pts[1].qfi;
    const double ratio_hz = pts[2].qfi / pts[3].qfi;
    r.pass = ratio_default > 10.0 && ratio_hz > 1.0;
    r.detail = "F_ccw/F_cw = " + fmt("%.3f", ratio_default) + " (rad/s, " +
               experiments::to_string(pts[0].status) + "/" + experiments::to_string(pts[1].status) +
               "), " + fmt("%.3f", ratio_hz) + " (Hz, " + experiments::to_string(pts[2].status) + "/" +
               experiments::to_string(pts[3].status) + ")";
  });
}

namespace {

std::vector<experiments::SteadyPoint> strong_drive_sweep(double J_over_kappa, int threads) {
  const PhysicalParams p = strong_drive(6000.0, J_over_kappa);
  const auto deltas = rl::linspace(-1.5, 1.5, 61);
  return experiments::run_detuning_sweep(p, deltas, steady_defaults(), threads);
}

std::vector<double> precision_curve(const std::vector<experiments::SteadyPoint>& pts) {
  std::vector<double> v;
  for (const auto& pt : pts) v.push_back(pt.precision / PhysicalParams{}.omega_m_si);
  return v;
}

}  // namespace

CheckResult precision_magnitude(int threads) {
  return timed("steady precision magnitude", [&](CheckResult& r) {
    const auto pts = strong_drive_sweep(0.0, threads);
    const auto v = precision_curve(pts);
    const auto it = std::min_element(v.begin(), v.end());
    const int failed = static_cast<int>(std::count_if(pts.begin(), pts.end(), [](const auto& pt) {
      return pt.status == experiments::PointStatus::failed;
    }));
    r.pass = failed == 0 && *it >= 1e-10 && *it <= 1e-7;
    r.detail = "min DeltaOmega/omega_m = " + fmt("%.3e", *it) + " at Delta_c = " +
               fmt("%.2f", pts[it - v.begin()].delta_c) + ", failed points " + std::to_string(failed);
  });
}

CheckResult heisenberg_scaling(int threads) {
  return timed("QFI scaling with photon number", [&](CheckResult& r) {
    const PhysicalParams p = strong_drive(1000.0, 0.0);
    const double eps[] = {1000.0, 2000.0, 4000.0, 6000.0};
    const auto res = experiments::run_scaling_study(p, eps, steady_defaults(), threads);
    r.pass = res.slope >= 1.7 && res.slope <= 2.3;
    r.detail = "slope d ln F / d ln N_p = " + fmt("%.3f", res.slope);
  });
}

CheckResult double_peak(int threads) {
  return timed("double-peak precision curve", [&](CheckResult& r) {
    const auto pts = strong_drive_sweep(1.0, threads);
    const auto v = precision_curve(pts);
    const auto mins = experiments::local_minima(v);
    r.pass = experiments::has_double_minimum(v);
    std::ostringstream os;
    os << mins.size() << " local minima at Delta_c =";
    for (int i : mins) os << ' ' << fmt("%.2f", pts[i].delta_c);
    r.detail = os.str();
  });
}

CheckResult ppo_beats_baseline(const PpoCase& c) {
  return timed("PPO beats fixed detuning", [&](CheckResult& r) {
    rl::GyroEnvConfig cfg;
    cfg.params.epsilon = 2000.0;
    cfg.params.n_bar_m = 5.0;
    cfg.params.backscatter_J = 0.1 * cfg.params.kappa;
    cfg.omega_grid = rl::linspace(-4000.0, 4000.0, 9);

    const auto actions = rl::linspace(cfg.action_low, cfg.action_high, 31);
    const auto base = experiments::run_fixed_detuning_baseline(cfg, actions, c.threads);
    const double best_const = base.points[base.best_index].max_average_qfi;
    if (c.progress)
      c.progress("baseline best F-bar " + fmt("%.4g", best_const) + " at Delta_c = " +
                 fmt("%.2f", base.points[base.best_index].action));

    std::vector<double> ratios;
    for (int seed = 0; seed < c.seeds; ++seed) {
      rl::GyroEnv env(cfg);
      rl::PpoConfig pc;
      pc.seed = static_cast<std::uint64_t>(seed);
      rl::TrainOptions opts;
      opts.iterations = c.iterations;
      opts.threads = c.threads;
      const auto res = rl::train(env, pc, opts);
      ratios.push_back(res.best_eval_average_qfi / best_const);
      if (c.progress) c.progress("seed " + std::to_string(seed) + " ratio " + fmt("%.4f", ratios.back()));
    }
    std::vector<double> sorted = ratios;
    std::sort(sorted.begin(), sorted.end());
    const double median = sorted[sorted.size() / 2];
    const double mean = std::accumulate(ratios.begin(), ratios.end(), 0.0) / ratios.size();
    r.pass = sorted.front() >= 1.0 && median >= 1.05 && mean >= 1.0;
    std::ostringstream os;
    os << "best constant F-bar " << fmt("%.4g", best_const) << "; PPO/constant ratios";
    for (double x : ratios) os << ' ' << fmt("%.4f", x);
    os << "; median " << fmt("%.4f", median);
    r.detail = os.str();
  });
}

CheckResult ppo_bandit(int seeds, int iterations) {
  return timed("PPO bandit smoke test", [&](CheckResult& r) {
    std::ostringstream os;
    os << "final mean actions";
    bool all = true;
    for (int seed = 0; seed < seeds; ++seed) {
      rl::BanditEnv env(0.7);
      rl::PpoConfig pc;
      pc.seed = static_cast<std::uint64_t>(seed);
      rl::TrainOptions opts;
      opts.iterations = iterations;
      const auto res = rl::train(env, pc, opts);
      const double a = res.curve.back().eval_mean_action;
      all = all && std::abs(a - env.optimum()) < 0.05;
      os << ' ' << fmt("%.4f", a);
    }
    r.pass = all;
    r.detail = os.str() + " (optimum 0.7)";
  });
}

}  // namespace gyro::checks
