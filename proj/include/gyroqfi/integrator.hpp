#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "gyroqfi/dynamics.hpp"
#include "gyroqfi/errors.hpp"

namespace gyro {

struct IntegratorOptions {
  double tol = 1e-8;
  double min_step = 1e-12;
  double initial_step = 1e-2;
  long max_steps = 2'000'000;
};

struct IntegratorStats {
  long accepted = 0;
  long rejected = 0;
  long rhs_evals = 0;
};

/// Dormand-Prince 5(4) embedded pair with FSAL and per-component error
/// control: |err_i| <= tol * (1 + |y_i|).
///
/// `Vec` must be an Eigen vector type; `Rhs` is callable as
/// `rhs(t, y, dydt)`.
template <typename Vec>
class DormandPrince {
 public:
  explicit DormandPrince(IntegratorOptions opts) : opts_(opts) {
    if (!(opts_.tol > 0.0 && opts_.tol <= 1e-2))
      throw ConfigError("integrator tolerance must lie in (0, 1e-2]");
  }

  /// Advances `y` from t0 to t1 exactly. The step size carries over between
  /// calls through `next_step()`.
  template <typename Rhs>
  void advance(Vec& y, double t0, double t1, Rhs&& rhs) {
    if (!(t1 > t0)) return;
    double t = t0;
    double h = std::min(h_next_ > 0.0 ? h_next_ : opts_.initial_step, t1 - t0);
    Vec k1 = y, k2 = y, k3 = y, k4 = y, k5 = y, k6 = y, k7 = y, ytmp = y, ynew = y;
    rhs(t, y, k1);
    ++stats_.rhs_evals;

    while (t < t1) {
      if (stats_.accepted + stats_.rejected >= opts_.max_steps)
        throw StepSizeUnderflow("integrator exceeded the maximum step count");
      bool last = false;
      if (t + h >= t1 || t1 - (t + h) < 1e-12 * std::max(1.0, std::abs(t1))) {
        h = t1 - t;
        last = true;
      }

      ytmp = y + h * (a21 * k1);
      rhs(t + c2 * h, ytmp, k2);
      ytmp = y + h * (a31 * k1 + a32 * k2);
      rhs(t + c3 * h, ytmp, k3);
      ytmp = y + h * (a41 * k1 + a42 * k2 + a43 * k3);
      rhs(t + c4 * h, ytmp, k4);
      ytmp = y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4);
      rhs(t + c5 * h, ytmp, k5);
      ytmp = y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5);
      rhs(t + h, ytmp, k6);
      ynew = y + h * (a71 * k1 + a73 * k3 + a74 * k4 + a75 * k5 + a76 * k6);
      rhs(t + h, ynew, k7);
      stats_.rhs_evals += 6;

      double err = 0.0;
      for (Eigen::Index i = 0; i < y.size(); ++i) {
        const auto e = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] +
                            e7 * k7[i]);
        const double scale = opts_.tol * (1.0 + std::max(std::abs(y[i]), std::abs(ynew[i])));
        err = std::max(err, std::abs(e) / scale);
      }
      if (!std::isfinite(err)) {
        ++stats_.rejected;
        h *= 0.1;
        if (h < opts_.min_step) throw NonFinite("state became non-finite during integration");
        continue;
      }

      if (err <= 1.0) {
        t = last ? t1 : t + h;
        y = ynew;
        k1 = k7;
        ++stats_.accepted;
        const double fac = err == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(err, -0.2), 0.2, 5.0);
        const double proposed = h * fac;
        if (last) {
          h_next_ = std::max(h_next_, proposed);
        } else {
          h = proposed;
          h_next_ = proposed;
        }
      } else {
        ++stats_.rejected;
        h *= std::clamp(0.9 * std::pow(err, -0.2), 0.1, 0.9);
        if (h < opts_.min_step)
          throw StepSizeUnderflow("step size fell below " + std::to_string(opts_.min_step));
      }
    }
    if (!allFinite(y)) throw NonFinite("state became non-finite during integration");
  }

  const IntegratorStats& stats() const { return stats_; }
  double next_step() const { return h_next_; }

 private:
  static bool allFinite(const Vec& v) {
    for (Eigen::Index i = 0; i < v.size(); ++i)
      if (!std::isfinite(std::abs(v[i]))) return false;
    return true;
  }

  static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  static constexpr double a21 = 1.0 / 5;
  static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                          a54 = -212.0 / 729;
  static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                          a64 = 49.0 / 176, a65 = -5103.0 / 18656;
  static constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192,
                          a75 = -2187.0 / 6784, a76 = 11.0 / 84;
  // Difference between the 5th- and 4th-order weights.
  static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                          e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;

  IntegratorOptions opts_;
  IntegratorStats stats_;
  double h_next_ = 0.0;
};

struct Trajectory {
  std::vector<AugmentedState> samples;
  IntegratorStats stats;
};

/// Integrates the augmented system from s0.t to t_end under `schedule`.
/// Breakpoints inside the interval are step boundaries; the result holds the
/// states at every requested sample time and every breakpoint, in time order,
/// plus the final state.
Trajectory integrate(const AugmentedState& s0, const DynamicsContext& ctx,
                     const DetuningSchedule& schedule, double t_end, double tol,
                     std::span<const double> sample_times = {});

/// Single constant-detuning leg, used by the environment's inner loop.
AugmentedState advance_constant(const AugmentedState& s, const DynamicsContext& ctx,
                                double delta_c, double t_end, double tol,
                                IntegratorStats* stats = nullptr);

}  // namespace gyro
