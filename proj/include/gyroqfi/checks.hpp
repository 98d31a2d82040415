#pragma once

#include <functional>
#include <string>
#include <vector>

namespace gyro::checks {

struct CheckResult {
  std::string name;
  bool pass = false;
  std::string detail;
  double seconds = 0.0;
};

/// Linear cavity (g0 = 0, J = 0, n_bar = 0): pipeline QFI against
/// 4 |d alpha_out / d Omega|^2 from the closed-form steady state.
CheckResult linear_cavity_qfi(double rel_tol = 1e-8);

/// epsilon = 0, n_bar = 5, cold start: <b+b>(t) = 5 (1 - exp(-gamma_m t)).
CheckResult thermal_relaxation(double rel_tol = 1e-8);

struct OracleCase {
  double g0 = 0.02;
  double epsilon = 0.2;
  double omega = 0.0;  // rad/s
  double t_end = 10.0;
  int samples = 11;
  int n_levels = 8;
  double tol = 1e-3;
};

/// Fock-space Lindblad solver against the moment solver on all 24 tracked
/// expectations.
CheckResult oracle_equivalence(const OracleCase& c = {});

/// Augmented sensitivities against central differences in Omega.
CheckResult sensitivity_finite_difference(double rel_tol = 1e-4);

/// Steady F_ccw / F_cw at delta_c = 0.5, Omega = 2000 in the default unit,
/// epsilon = 6000: above 10 by default, above 1 with Omega read in Hz.
CheckResult nonreciprocity(int threads = 1);

/// Minimum of Delta Omega(inf) / omega_m over a 61-point detuning sweep.
CheckResult precision_magnitude(int threads = 1);

/// Log-log slope of steady F against N_p for epsilon in {1000, 2000, 4000, 6000}.
CheckResult heisenberg_scaling(int threads = 1);

/// Two local minima of Delta Omega(Delta_c) separated by a maximum at J = kappa.
CheckResult double_peak(int threads = 1);

struct PpoCase {
  int iterations = 300;
  int seeds = 3;
  int threads = 1;
  std::function<void(const std::string&)> progress;
};

/// PPO against the best of 31 constant detunings in the 9-point band
/// environment (n_bar = 5, J = 0.1 kappa, epsilon = 2000).
CheckResult ppo_beats_baseline(const PpoCase& c = {});

/// PPO on the quadratic bandit: final mean action within 0.05 of the optimum
/// for every seed.
CheckResult ppo_bandit(int seeds = 3, int iterations = 500);

}  // namespace gyro::checks
