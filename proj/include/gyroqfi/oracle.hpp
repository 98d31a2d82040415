#pragma once

#include <Eigen/Dense>
#include <Eigen/SparseCore>
#include <span>
#include <vector>

#include "gyroqfi/dynamics.hpp"
#include "gyroqfi/model.hpp"

namespace gyro::oracle {

/// Truncation of each mode's Fock space and the fixed RK4 step.
struct FockConfig {
  int n_cav_ccw = 8;
  int n_cav_cw = 8;
  int n_mech = 8;
  double dt = 1e-2;  // 1/omega_m
  /// Population allowed in the highest Fock level of any mode.
  double leak_tolerance = 1e-4;

  /// Throws ConfigError unless every dimension is in [2, 16] and 0 < dt <= 1e-2.
  void validate() const;
  int dimension() const { return n_cav_ccw * n_cav_cw * n_mech; }
};

using DensityMatrix = Eigen::Matrix<cd, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using SparseOp = Eigen::SparseMatrix<cd>;

/// Ladder operators on the full tensor-product space. Basis index is
/// (n_ccw * n_cw_dim + n_cw) * n_mech_dim + n_mech.
struct Operators {
  explicit Operators(const FockConfig& cfg);

  SparseOp a_ccw, a_cw, b;
  SparseOp n_ccw, n_cw, n_b;
  SparseOp identity;
};

/// One expectation-value record; `x` uses the same central-moment ordering as
/// the moment solver, and `amps` holds <a_ccw>, <a_cw>, <b>.
struct Sample {
  double t = 0.0;
  ClassicalAmplitudes amps;
  MomentVector x = MomentVector::Zero();
  double trace = 1.0;
  double top_level_population = 0.0;
};

/// Lindblad evolution of the full nonlinear optomechanical master equation.
class FockSolver {
 public:
  FockSolver(const PhysicalParams& p, const FockConfig& cfg);

  const FockConfig& config() const { return cfg_; }
  const Operators& ops() const { return ops_; }

  /// Vacuum optics with the mechanics in a (truncated, renormalised) thermal
  /// state of occupation n_bar, or in its ground state for `cold`.
  DensityMatrix initial_state(InitialPhonons phonons = InitialPhonons::thermal) const;
  DensityMatrix fock_state(int n_ccw, int n_cw, int n_mech) const;

  /// drho/dt at detuning delta_c_now.
  DensityMatrix rhs(const DensityMatrix& rho, double delta_c_now) const;

  Sample measure(const DensityMatrix& rho, double t) const;

  /// Fixed-step RK4 from t0 to t1; the step is shrunk so t1 is hit exactly.
  /// Throws TruncationLeak or NonFinite.
  void advance(DensityMatrix& rho, double t0, double t1, double delta_c_now) const;

  /// Samples at t0, every requested time and every breakpoint, in order.
  std::vector<Sample> evolve(DensityMatrix rho, const DetuningSchedule& schedule, double t_end,
                             std::span<const double> sample_times = {}) const;

 private:
  struct Term {
    int row;
    int col;
    cd value;
  };
  // An operator with at most one nonzero per row: row i maps from col[i].
  struct Ladder {
    std::vector<int> col;
    std::vector<cd> value;
  };

  SparseOp hamiltonian(double delta_c_now) const;
  std::vector<Term> effective_generator(double delta_c_now) const;
  void apply(const DensityMatrix& rho, const std::vector<Term>& gen, DensityMatrix& out,
             DensityMatrix& work) const;
  void check_leak(const DensityMatrix& rho) const;
  double top_level_population(const DensityMatrix& rho) const;

  PhysicalParams p_;
  FockConfig cfg_;
  Operators ops_;
  std::vector<Ladder> jumps_;
  SparseOp damping_;  // (1/2) sum c+ c
};

/// Converts oracle samples to moment-solver states (sensitivities zero) so the
/// trajectory CSV writer can be shared.
std::vector<AugmentedState> to_states(std::span<const Sample> samples);

}  // namespace gyro::oracle
