#pragma once

#include <optional>
#include <utility>

namespace gyro {

/// Optical mode label. `ccw` is the counterclockwise mode (driven by a
/// left-side pump), `cw` the clockwise one.
enum class Mode { ccw, cw };

enum class DriveDirection { ccw, cw };

/// Unit in which user-facing angular velocities are given.
enum class OmegaUnit { hz, rad_per_s };

/// Rotation direction counted as positive Omega. Under clockwise rotation the
/// ccw mode is shifted up by |Delta_F| and the cw mode down.
enum class RotationSense { ccw_positive, cw_positive };

/// Device constants and operating point.
///
/// SI fields carry SI units. Rates that enter the dynamics (kappa, gamma_m,
/// backscatter_J, epsilon, delta_c) are dimensionless multiples of the
/// mechanical angular frequency omega_m. `omega` is the signed rotation rate in
/// rad/s; `rotation_sense` says which direction is positive.
struct PhysicalParams {
  double refractive_index = 1.48;
  double mass_kg = 1.0e-11;  // 10 ng
  double radius_m = 1.1e-3;
  double wavelength_m = 0.78e-6;
  double omega_m_si = 5.0e7;  // rad/s

  double kappa = 0.44;
  double gamma_m = 3.5e-3;
  double backscatter_J = 0.0;
  double epsilon = 0.0;
  double n_bar_m = 0.0;
  double delta_c = 0.5;
  DriveDirection drive = DriveDirection::ccw;
  double omega = 0.0;
  RotationSense rotation_sense = RotationSense::ccw_positive;

  /// Replaces the derived single-photon coupling (units of omega_m). Used by
  /// desk-scale cross-checks that need a strong coupling.
  std::optional<double> g0_override;
  /// Replaces the derived Sagnac slope n R omega_c / c.
  std::optional<double> sagnac_slope_override;

  /// Throws ConfigError naming the first violated constraint.
  void validate() const;
};

struct DerivedRates {
  double omega_c = 0.0;       // rad/s
  double g0 = 0.0;            // units of omega_m
  double sagnac_slope = 0.0;  // dDelta_F/dOmega, dimensionless
};

/// Sign of the Sagnac shift of `mode` for Omega > 0.
constexpr double sagnac_sign(Mode mode, RotationSense sense) {
  const double cw_rotation = mode == Mode::ccw ? 1.0 : -1.0;
  return sense == RotationSense::cw_positive ? cw_rotation : -cw_rotation;
}

double optical_frequency(const PhysicalParams& p);
DerivedRates derived_rates(const PhysicalParams& p);

/// Sagnac-Fizeau shift of `mode` in units of omega_m. Odd and linear in Omega.
double sagnac_shift(const PhysicalParams& p, double omega, Mode mode);

/// g0 = (omega_c / R) sqrt(hbar / (m omega_m)), in units of omega_m.
double single_photon_coupling(const PhysicalParams& p);

/// Shift of the detuning of `mode` per rad/s of rotation, in units of omega_m.
double detuning_slope(const PhysicalParams& p, Mode mode);

/// (Delta_ccw, Delta_cw) = Delta_c +/- Delta_F, without the radiation-pressure
/// correction.
std::pair<double, double> effective_static_detunings(const PhysicalParams& p);

/// Bose-Einstein occupation of the mechanical mode; 0 at T = 0.
double thermal_occupation(double omega_m_si, double temperature_k);

/// Converts a user-facing angular velocity to rad/s.
double to_rad_per_s(double value, OmegaUnit unit);
double from_rad_per_s(double omega, OmegaUnit unit);

/// Dimensionless rate in units of omega_m to SI rad/s, and back.
inline double to_si_rate(const PhysicalParams& p, double rate) { return rate * p.omega_m_si; }
inline double to_omega_m_units(const PhysicalParams& p, double rate_si) {
  return rate_si / p.omega_m_si;
}

}  // namespace gyro
