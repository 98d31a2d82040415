#include "gyroqfi/experiments.hpp"

#include <algorithm>
#include <cmath>

#include "gyroqfi/errors.hpp"
#include "gyroqfi/parallel.hpp"

namespace gyro::experiments {

namespace {

DynamicsPoint measure(const AugmentedState& s, const PhysicalParams& p, DisplacementFrame frame) {
  const QfiResult q = state_qfi(s, p, frame);
  DynamicsPoint d;
  d.t = s.t;
  d.qfi = q.value;
  d.precision = q.precision;
  d.branch = q.branch;
  d.n_photons = std::norm(s.amps.alpha_ccw) + std::norm(s.amps.alpha_cw);
  d.n_phonons = std::norm(s.amps.beta);
  return d;
}

}  // namespace

DynamicsRun run_qfi_dynamics(const PhysicalParams& p, double t_end, int n_samples,
                             const RunOptions& opts) {
  p.validate();
  if (n_samples < 2) throw ConfigError("samples must be >= 2");
  const std::vector<double> times = rl::linspace(0.0, t_end, n_samples);
  const DynamicsContext ctx(p);
  DynamicsRun run;
  run.trajectory = integrate(initial_state(p, opts.phonons), ctx,
                             DetuningSchedule::constant(p.delta_c), t_end, opts.tol, times);
  for (const auto& s : run.trajectory.samples) run.points.push_back(measure(s, p, opts.frame));
  return run;
}

const char* to_string(PointStatus s) {
  switch (s) {
    case PointStatus::converged: return "converged";
    case PointStatus::not_converged: return "not_converged";
    case PointStatus::failed: return "failed";
  }
  return "?";
}

SteadyPoint steady_state(const PhysicalParams& p, const SteadyOptions& opts) {
  p.validate();
  if (!(opts.t_cap > 0.0) || !(opts.window_fraction > 0.0 && opts.window_fraction < 1.0) ||
      opts.window_samples < 2)
    throw ConfigError("invalid steady-state options");
  SteadyPoint out;
  out.delta_c = p.delta_c;
  out.epsilon = p.epsilon;

  const DynamicsContext ctx(p);
  IntegratorOptions io;
  io.tol = opts.run.tol;
  DormandPrince<StateVector> stepper(io);
  StateVector y = initial_state(p, opts.run.phonons).pack();
  double t = 0.0;
  const auto rhs = [&](double, const StateVector& yy, StateVector& dy) {
    sensitivity_rhs_packed(yy, ctx, p.delta_c, dy);
  };

  try {
    for (double horizon : {opts.t_cap / 8, opts.t_cap / 4, opts.t_cap / 2, opts.t_cap}) {
      std::vector<double> window;
      for (double tw : rl::linspace((1.0 - opts.window_fraction) * horizon, horizon,
                                    opts.window_samples)) {
        stepper.advance(y, t, tw, rhs);
        t = std::max(t, tw);
        window.push_back(state_qfi(AugmentedState::unpack(y, t), p, opts.run.frame).value);
      }
      const AugmentedState s = AugmentedState::unpack(y, t);
      const DynamicsPoint d = measure(s, p, opts.run.frame);
      const auto [lo, hi] = std::minmax_element(window.begin(), window.end());
      out.qfi = d.qfi;
      out.precision = d.precision;
      out.branch = d.branch;
      out.n_photons = d.n_photons;
      out.n_phonons = d.n_phonons;
      out.t_reached = t;
      out.window_change = d.qfi > 0.0 ? (*hi - *lo) / d.qfi : 0.0;
      if (out.window_change < opts.rel_tol) {
        out.status = PointStatus::converged;
        return out;
      }
    }
    out.status = PointStatus::not_converged;
  } catch (const Error& e) {
    out.status = PointStatus::failed;
    out.message = e.what();
  }
  return out;
}

std::vector<SteadyPoint> run_detuning_sweep(const PhysicalParams& p,
                                            std::span<const double> delta_cs,
                                            const SteadyOptions& opts, int threads) {
  for (std::size_t i = 1; i < delta_cs.size(); ++i)
    if (!(delta_cs[i] > delta_cs[i - 1])) throw ConfigError("sweep values must be sorted");
  if (delta_cs.empty()) throw ConfigError("sweep values must be nonempty");
  std::vector<SteadyPoint> out(delta_cs.size());
  parallel_for(static_cast<int>(delta_cs.size()), threads, [&](int i, int) {
    PhysicalParams q = p;
    q.delta_c = delta_cs[i];
    out[i] = steady_state(q, opts);
  });
  return out;
}

std::vector<int> local_minima(std::span<const double> v) {
  std::vector<int> idx;
  for (std::size_t i = 1; i + 1 < v.size(); ++i)
    if (v[i] < v[i - 1] && v[i] < v[i + 1]) idx.push_back(static_cast<int>(i));
  return idx;
}

std::vector<int> local_maxima(std::span<const double> v) {
  std::vector<int> idx;
  for (std::size_t i = 1; i + 1 < v.size(); ++i)
    if (v[i] > v[i - 1] && v[i] > v[i + 1]) idx.push_back(static_cast<int>(i));
  return idx;
}

bool has_double_minimum(std::span<const double> v) {
  const auto mins = local_minima(v);
  if (mins.size() != 2) return false;
  for (int m : local_maxima(v))
    if (m > mins[0] && m < mins[1]) return true;
  return false;
}

double loglog_slope(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw TooFewSamples("slope needs two or more points");
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0 && y[i] > 0.0)) throw ConfigError("log-log slope needs positive data");
    mx += std::log(x[i]);
    my += std::log(y[i]);
  }
  mx /= x.size();
  my /= y.size();
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = std::log(x[i]) - mx;
    sxy += dx * (std::log(y[i]) - my);
    sxx += dx * dx;
  }
  if (sxx == 0.0) throw ConfigError("log-log slope needs distinct x values");
  return sxy / sxx;
}

ScalingResult run_scaling_study(const PhysicalParams& p, std::span<const double> epsilons,
                                const SteadyOptions& opts, int threads) {
  if (epsilons.size() < 2) throw TooFewSamples("scaling study needs two or more epsilons");
  ScalingResult r;
  r.points.resize(epsilons.size());
  parallel_for(static_cast<int>(epsilons.size()), threads, [&](int i, int) {
    PhysicalParams q = p;
    q.epsilon = epsilons[i];
    r.points[i] = steady_state(q, opts);
  });
  std::vector<double> np, f;
  for (const auto& pt : r.points) {
    if (pt.status == PointStatus::failed) throw NonFinite("scaling point failed: " + pt.message);
    np.push_back(pt.n_photons);
    f.push_back(pt.qfi);
  }
  r.slope = loglog_slope(np, f);
  return r;
}

std::pair<double, double> max_average_qfi(const rl::PolicyEvaluation& ev) {
  double best = 0.0, t = 0.0;
  for (std::size_t k = 0; k < ev.average_qfi.size(); ++k)
    if (ev.average_qfi[k] > best) {
      best = ev.average_qfi[k];
      t = ev.times[k];
    }
  return {best, t};
}

BaselineResult run_fixed_detuning_baseline(const rl::GyroEnvConfig& cfg,
                                           std::span<const double> actions, int threads) {
  if (actions.empty()) throw ConfigError("baseline needs at least one action");
  BaselineResult r;
  r.points.resize(actions.size());
  std::vector<rl::PolicyEvaluation> traces(actions.size());
  const int workers = std::max(1, std::min<int>(threads, static_cast<int>(actions.size())));
  std::vector<rl::GyroEnv> envs(workers, rl::GyroEnv(cfg));
  parallel_for(static_cast<int>(actions.size()), workers, [&](int i, int w) {
    traces[i] = rl::evaluate_constant(actions[i], envs[w]);
    const auto [best, t] = max_average_qfi(traces[i]);
    r.points[i] = {actions[i], best, t};
  });
  for (std::size_t i = 1; i < r.points.size(); ++i)
    if (r.points[i].max_average_qfi > r.points[r.best_index].max_average_qfi)
      r.best_index = static_cast<int>(i);
  r.best_trace = traces[r.best_index];
  return r;
}

}  // namespace gyro::experiments
