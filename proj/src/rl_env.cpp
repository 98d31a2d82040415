#include <algorithm>
#include <cmath>
#include <limits>

#include "gyroqfi/errors.hpp"
#include "gyroqfi/integrator.hpp"
#include "gyroqfi/rl.hpp"

namespace gyro::rl {

BanditEnv::BanditEnv(double optimum, double low, double high)
    : optimum_(optimum), low_(low), high_(high) {
  if (!(low < high) || optimum < low || optimum > high)
    throw ConfigError("bandit optimum must lie inside the action bounds");
}

Eigen::VectorXd BanditEnv::reset() { return Eigen::VectorXd::Ones(1); }

StepResult BanditEnv::step(const Eigen::VectorXd& action) {
  const double a = std::clamp(action[0], low_, high_);
  StepResult r;
  r.observation = Eigen::VectorXd::Ones(1);
  r.reward = -(a - optimum_) * (a - optimum_);
  r.done = true;
  r.average_qfi = std::numeric_limits<double>::quiet_NaN();
  return r;
}

std::vector<double> linspace(double lo, double hi, int n) {
  if (n < 1) throw ConfigError("linspace needs at least one point");
  if (n == 1) return {lo};
  std::vector<double> v(n);
  for (int i = 0; i < n; ++i) v[i] = lo + (hi - lo) * i / (n - 1);
  return v;
}

void GyroEnvConfig::validate() const {
  params.validate();
  if (omega_grid.empty()) throw ConfigError("omega grid must be nonempty");
  for (std::size_t i = 1; i < omega_grid.size(); ++i)
    if (!(omega_grid[i] > omega_grid[i - 1]))
      throw ConfigError("omega grid must be strictly increasing");
  if (n_steps < 1) throw ConfigError("env_steps must be >= 1");
  if (!(dtau > 0.0)) throw ConfigError("env_dtau_omega_m must be > 0");
  if (!(action_low < action_high)) throw ConfigError("action bounds must satisfy low < high");
  if (!(reward_scale > 0.0)) throw ConfigError("reward_scale must be > 0");
}

GyroEnv::GyroEnv(GyroEnvConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.validate();
  for (double w : cfg_.omega_grid) {
    PhysicalParams p = cfg_.params;
    p.omega = w;
    contexts_.emplace_back(p);
  }
  const double target = 0.5 * cfg_.omega_grid.back();
  reference_ = static_cast<int>(cfg_.omega_grid.size()) - 1;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < cfg_.omega_grid.size(); ++i) {
    const double w = cfg_.omega_grid[i];
    if (w > 0.0 && std::abs(w - target) < best) {
      best = std::abs(w - target);
      reference_ = static_cast<int>(i);
    }
  }
  reset();
}

Eigen::VectorXd GyroEnv::reset() {
  states_.assign(contexts_.size(), gyro::initial_state(cfg_.params, cfg_.initial_phonons));
  qfi_.assign(contexts_.size(), 0.0);
  step_ = 0;
  last_action_ = 0.0;
  average_qfi_ = 0.0;
  return observe();
}

StepResult GyroEnv::step(const Eigen::VectorXd& action) {
  if (step_ >= cfg_.n_steps) throw std::logic_error("step called on a finished episode");
  const double a = std::clamp(action[0], cfg_.action_low, cfg_.action_high);
  const double t1 = (step_ + 1) * cfg_.dtau;
  StepResult r;
  try {
    for (std::size_t m = 0; m < contexts_.size(); ++m) {
      const PhysicalParams& p = contexts_[m].params;
      states_[m] = advance_constant(states_[m], contexts_[m], a, t1, cfg_.tol);
      qfi_[m] = state_qfi(states_[m], p, cfg_.frame).value;
    }
  } catch (const Error& e) {
    step_ = cfg_.n_steps;
    r.observation = observe();
    r.done = true;
    r.failure = e.what();
    return r;
  }
  average_qfi_ = qfi_.size() >= 2 ? average_qfi(cfg_.omega_grid, qfi_) : qfi_[0];
  last_action_ = a;
  ++step_;
  r.done = step_ == cfg_.n_steps;
  r.average_qfi = average_qfi_;
  if (cfg_.reward_mode == RewardMode::per_step || r.done) r.reward = average_qfi_ / cfg_.reward_scale;
  r.observation = observe();
  return r;
}

Eigen::VectorXd GyroEnv::observe() const {
  const AugmentedState& s = states_[reference_];
  Eigen::VectorXd raw(kGyroObservationSize);
  const cd amps[3] = {s.amps.alpha_ccw, s.amps.alpha_cw, s.amps.beta};
  for (int i = 0; i < 3; ++i) {
    raw[2 * i] = amps[i].real();
    raw[2 * i + 1] = amps[i].imag();
  }
  for (int i = 0; i < kNumMoments; ++i) {
    raw[6 + 2 * i] = s.x[i].real();
    raw[7 + 2 * i] = s.x[i].imag();
  }
  raw[48] = static_cast<double>(step_) / cfg_.n_steps;
  raw[49] = last_action_;
  raw[50] = average_qfi_ / cfg_.reward_scale;
  return normalize_observation(raw);
}

Eigen::VectorXd normalize_observation(const Eigen::VectorXd& raw) {
  Eigen::VectorXd f = raw;
  for (Eigen::Index i = 0; i < f.size(); ++i)
    if (i != 48 && i != 49) f[i] = std::asinh(f[i]);
  return f;
}

}  // namespace gyro::rl
