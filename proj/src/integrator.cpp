#include "gyroqfi/integrator.hpp"

#include <algorithm>

namespace gyro {

Trajectory integrate(const AugmentedState& s0, const DynamicsContext& ctx,
                     const DetuningSchedule& schedule, double t_end, double tol,
                     std::span<const double> sample_times) {
  if (!(t_end > s0.t)) throw ConfigError("t_end must exceed the start time");

  std::vector<double> stops;
  for (double t : sample_times)
    if (t > s0.t && t <= t_end) stops.push_back(t);
  for (const auto& b : schedule.breakpoints())
    if (b.t_start > s0.t && b.t_start < t_end) stops.push_back(b.t_start);
  stops.push_back(t_end);
  std::sort(stops.begin(), stops.end());
  stops.erase(std::unique(stops.begin(), stops.end()), stops.end());

  Trajectory traj;
  traj.samples.reserve(stops.size() + 1);
  traj.samples.push_back(s0);

  IntegratorOptions opts;
  opts.tol = tol;
  DormandPrince<StateVector> stepper(opts);
  StateVector y = s0.pack();
  double t = s0.t;
  for (double stop : stops) {
    const double delta_c = schedule.value_at(t);
    stepper.advance(y, t, stop, [&](double, const StateVector& yy, StateVector& dy) {
      sensitivity_rhs_packed(yy, ctx, delta_c, dy);
    });
    t = stop;
    traj.samples.push_back(AugmentedState::unpack(y, t));
  }
  traj.stats = stepper.stats();
  return traj;
}

AugmentedState advance_constant(const AugmentedState& s, const DynamicsContext& ctx,
                                double delta_c, double t_end, double tol,
                                IntegratorStats* stats) {
  IntegratorOptions opts;
  opts.tol = tol;
  DormandPrince<StateVector> stepper(opts);
  StateVector y = s.pack();
  stepper.advance(y, s.t, t_end, [&](double, const StateVector& yy, StateVector& dy) {
    sensitivity_rhs_packed(yy, ctx, delta_c, dy);
  });
  if (stats) {
    stats->accepted += stepper.stats().accepted;
    stats->rejected += stepper.stats().rejected;
    stats->rhs_evals += stepper.stats().rhs_evals;
  }
  return AugmentedState::unpack(y, t_end);
}

}  // namespace gyro
