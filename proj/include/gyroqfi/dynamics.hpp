#pragma once

#include <Eigen/Dense>
#include <array>
#include <complex>
#include <span>
#include <vector>

#include "gyroqfi/model.hpp"

namespace gyro {

using cd = std::complex<double>;

inline constexpr int kNumMoments = 21;
inline constexpr int kNumAmplitudes = 3;
/// Packed augmented state: amplitudes, moments, then their Omega-derivatives.
inline constexpr int kStateSize = 2 * (kNumAmplitudes + kNumMoments);

/// Positions of the second-order moments of the fluctuation operators.
/// `a1` is the ccw optical mode, `a2` the cw optical mode, `b` the mechanics.
namespace moment {
enum Index : int {
  n_a1 = 0,       // <a1+ a1>
  n_a2 = 1,       // <a2+ a2>
  n_b = 2,        // <b+ b>
  a1d_a1d = 3,    // <a1+ a1+>
  a1_a1 = 4,      // <a1 a1>
  a2d_a2d = 5,    // <a2+ a2+>
  a2_a2 = 6,      // <a2 a2>
  bd_bd = 7,      // <b+ b+>
  b_b = 8,        // <b b>
  a1d_a2 = 9,     // <a1+ a2>
  a2d_a1 = 10,    // <a2+ a1>
  a1d_a2d = 11,   // <a1+ a2+>
  a1_a2 = 12,     // <a1 a2>
  a1d_b = 13,     // <a1+ b>
  a1_bd = 14,     // <a1 b+>
  a1d_bd = 15,    // <a1+ b+>
  a1_b = 16,      // <a1 b>
  a2d_b = 17,     // <a2+ b>
  a2_bd = 18,     // <a2 b+>
  a2d_bd = 19,    // <a2+ b+>
  a2_b = 20,      // <a2 b>
};

/// Each moment paired with its complex conjugate partner (number moments
/// are self-paired).
inline constexpr std::array<int, kNumMoments> conjugate_partner = {
    0, 1, 2, 4, 3, 6, 5, 8, 7, 10, 9, 12, 11, 14, 13, 16, 15, 18, 17, 20, 19};
}  // namespace moment

using MomentVector = Eigen::Matrix<cd, kNumMoments, 1>;
using DriftMatrix = Eigen::Matrix<cd, kNumMoments, kNumMoments>;
using StateVector = Eigen::Matrix<cd, kStateSize, 1>;

/// Mean fields of the two optical modes and the mechanical mode.
struct ClassicalAmplitudes {
  cd alpha_ccw{0.0, 0.0};
  cd alpha_cw{0.0, 0.0};
  cd beta{0.0, 0.0};
};

/// Everything the integrator advances together. Derivatives are per rad/s of
/// rotation; time is in units of 1/omega_m.
struct AugmentedState {
  ClassicalAmplitudes amps;
  ClassicalAmplitudes d_amps;
  MomentVector x = MomentVector::Zero();
  MomentVector dx = MomentVector::Zero();
  double t = 0.0;

  StateVector pack() const;
  static AugmentedState unpack(const StateVector& v, double t);
};

/// Piecewise-constant Delta_c(t) on left-closed intervals [t_k, t_{k+1}).
class DetuningSchedule {
 public:
  struct Breakpoint {
    double t_start;
    double delta_c;
  };

  explicit DetuningSchedule(std::vector<Breakpoint> breakpoints);
  static DetuningSchedule constant(double delta_c);

  double value_at(double t) const;
  std::span<const Breakpoint> breakpoints() const { return breakpoints_; }

 private:
  std::vector<Breakpoint> breakpoints_;
};

enum class InitialPhonons { thermal, cold };

/// Vacuum optical modes and zero displacement; <b+b> = n_bar_m for a thermal
/// start, 0 for a cold start.
AugmentedState initial_state(const PhysicalParams& p,
                             InitialPhonons phonons = InitialPhonons::thermal);

/// Sparse representation of the drift matrix. Every nonzero entry is a
/// coefficient times one of a few state-dependent symbols, so the same table
/// yields both A and its Omega-derivative.
class DriftStencil {
 public:
  enum class Symbol { one, g_ccw, g_ccw_conj, g_cw, g_cw_conj, det_ccw, det_cw };

  struct Entry {
    int row;
    int col;
    Symbol symbol;
    cd coef;
  };

  explicit DriftStencil(const PhysicalParams& p);

  std::span<const Entry> entries() const { return entries_; }

 private:
  std::vector<Entry> entries_;
};

/// Values of the stencil symbols for a given state (or their derivatives).
struct SymbolValues {
  std::array<cd, 7> v{};
  cd operator[](DriftStencil::Symbol s) const { return v[static_cast<int>(s)]; }
};

/// Static detunings of the two modes plus derived constants, cached for the
/// hot right-hand side.
struct DynamicsContext {
  explicit DynamicsContext(const PhysicalParams& p);

  PhysicalParams params;
  double g0;
  double slope_ccw;  // dDelta_ccw/dOmega, omega_m units per rad/s
  double slope_cw;
  DriftStencil stencil;
};

double effective_detuning(double static_detuning, double g0, cd beta);

/// Time derivative of the mean fields.
ClassicalAmplitudes classical_rhs(const ClassicalAmplitudes& amps, const PhysicalParams& p,
                                  double delta_c_now, double omega);

/// Dense 21x21 drift matrix assembled from the stencil.
DriftMatrix build_drift_matrix(const ClassicalAmplitudes& amps, const PhysicalParams& p,
                               double delta_c_now, double omega);

MomentVector build_inhomogeneous(const ClassicalAmplitudes& amps, const PhysicalParams& p);

/// Full augmented right-hand side at the operating point stored in `ctx`.
AugmentedState sensitivity_rhs(const AugmentedState& s, const DynamicsContext& ctx,
                               double delta_c_now);

/// Packed form used by the integrator.
void sensitivity_rhs_packed(const StateVector& y, const DynamicsContext& ctx,
                            double delta_c_now, StateVector& dydt);

}  // namespace gyro
