#pragma once

#include <span>
#include <string>
#include <vector>

#include "gyroqfi/integrator.hpp"
#include "gyroqfi/metrology.hpp"
#include "gyroqfi/model.hpp"
#include "gyroqfi/rl.hpp"

namespace gyro::experiments {

struct RunOptions {
  double tol = 1e-8;
  InitialPhonons phonons = InitialPhonons::thermal;
  DisplacementFrame frame = DisplacementFrame::output;
};

struct DynamicsPoint {
  double t = 0.0;
  double qfi = 0.0;
  double precision = 0.0;
  double n_photons = 0.0;  // |alpha_ccw|^2 + |alpha_cw|^2
  double n_phonons = 0.0;  // |beta|^2
  QfiBranch branch = QfiBranch::pure;
};

struct DynamicsRun {
  std::vector<DynamicsPoint> points;
  Trajectory trajectory;
};

/// QFI, photon and phonon numbers on `n_samples` evenly spaced times in
/// [0, t_end] at constant detuning p.delta_c.
DynamicsRun run_qfi_dynamics(const PhysicalParams& p, double t_end, int n_samples,
                             const RunOptions& opts = {});

struct SteadyOptions {
  RunOptions run;
  double t_cap = 200.0;
  double window_fraction = 0.1;
  double rel_tol = 0.01;
  int window_samples = 11;
};

enum class PointStatus { converged, not_converged, failed };
const char* to_string(PointStatus s);

struct SteadyPoint {
  double delta_c = 0.0;
  double epsilon = 0.0;
  double qfi = 0.0;
  double precision = 0.0;
  double n_photons = 0.0;
  double n_phonons = 0.0;
  double t_reached = 0.0;
  double window_change = 0.0;
  QfiBranch branch = QfiBranch::pure;
  PointStatus status = PointStatus::not_converged;
  std::string message;
};

/// Integrates at p.delta_c over horizons t_cap/8, t_cap/4, t_cap/2, t_cap and
/// stops at the first horizon T where F varies by less than rel_tol (relative
/// to F(T)) across the trailing window [(1 - window_fraction) T, T]. The last
/// horizon's values are reported with status not_converged otherwise.
/// Integration failures give status failed instead of throwing.
SteadyPoint steady_state(const PhysicalParams& p, const SteadyOptions& opts);

std::vector<SteadyPoint> run_detuning_sweep(const PhysicalParams& p,
                                            std::span<const double> delta_cs,
                                            const SteadyOptions& opts, int threads = 1);

/// Interior strict local minima of a sampled curve.
std::vector<int> local_minima(std::span<const double> v);
std::vector<int> local_maxima(std::span<const double> v);

/// Exactly two interior local minima with a local maximum between them.
bool has_double_minimum(std::span<const double> v);

struct ScalingResult {
  std::vector<SteadyPoint> points;
  double slope = 0.0;  // d ln F / d ln N_p
};

/// Least-squares slope of ln y against ln x.
double loglog_slope(std::span<const double> x, std::span<const double> y);

ScalingResult run_scaling_study(const PhysicalParams& p, std::span<const double> epsilons,
                                const SteadyOptions& opts, int threads = 1);

struct BaselinePoint {
  double action = 0.0;
  double max_average_qfi = 0.0;
  double t_at_max = 0.0;
};

struct BaselineResult {
  std::vector<BaselinePoint> points;
  int best_index = 0;
  rl::PolicyEvaluation best_trace;
};

/// Constant-detuning episodes in the band environment; each point records
/// the largest band-averaged QFI over the episode's step times.
BaselineResult run_fixed_detuning_baseline(const rl::GyroEnvConfig& cfg,
                                           std::span<const double> actions, int threads = 1);

/// Largest entry of an evaluation's F-bar trace and the time it occurs.
std::pair<double, double> max_average_qfi(const rl::PolicyEvaluation& ev);

}  // namespace gyro::experiments
