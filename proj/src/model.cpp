#include "gyroqfi/model.hpp"

#include <cmath>
#include <string>

#include "gyroqfi/constants.hpp"
#include "gyroqfi/errors.hpp"

namespace gyro {

namespace {

void require(bool ok, const char* what) {
  if (!ok) throw ConfigError(std::string("invalid parameter: ") + what);
}

}  // namespace

void PhysicalParams::validate() const {
  require(std::isfinite(kappa) && kappa > 0.0, "kappa_over_omega_m must be > 0");
  require(std::isfinite(gamma_m) && gamma_m > 0.0, "gamma_m_over_omega_m must be > 0");
  require(std::isfinite(omega_m_si) && omega_m_si > 0.0, "omega_m_rad_s must be > 0");
  require(std::isfinite(n_bar_m) && n_bar_m >= 0.0, "n_bar_m must be >= 0");
  require(std::isfinite(radius_m) && radius_m > 0.0, "radius_m must be > 0");
  require(std::isfinite(mass_kg) && mass_kg > 0.0, "mass_kg must be > 0");
  require(std::isfinite(wavelength_m) && wavelength_m > 0.0, "wavelength_m must be > 0");
  require(std::isfinite(refractive_index) && refractive_index > 0.0,
          "refractive_index must be > 0");
  require(std::isfinite(backscatter_J), "J_over_omega_m must be finite");
  require(std::isfinite(epsilon), "epsilon must be finite");
  require(std::isfinite(delta_c), "delta_c_over_omega_m must be finite");
  require(std::isfinite(omega), "omega must be finite");
  require(optical_frequency(*this) > omega_m_si, "omega_c must exceed omega_m");
}

double optical_frequency(const PhysicalParams& p) {
  return constants::two_pi * constants::speed_of_light / p.wavelength_m;
}

DerivedRates derived_rates(const PhysicalParams& p) {
  DerivedRates r;
  r.omega_c = optical_frequency(p);
  r.g0 = single_photon_coupling(p);
  r.sagnac_slope = p.sagnac_slope_override.value_or(
      p.refractive_index * p.radius_m * r.omega_c / constants::speed_of_light);
  return r;
}

double single_photon_coupling(const PhysicalParams& p) {
  if (p.g0_override) return *p.g0_override;
  const double g0_si =
      optical_frequency(p) / p.radius_m * std::sqrt(constants::hbar / (p.mass_kg * p.omega_m_si));
  return g0_si / p.omega_m_si;
}

double detuning_slope(const PhysicalParams& p, Mode mode) {
  return sagnac_sign(mode, p.rotation_sense) * derived_rates(p).sagnac_slope / p.omega_m_si;
}

double sagnac_shift(const PhysicalParams& p, double omega, Mode mode) {
  return detuning_slope(p, mode) * omega;
}

std::pair<double, double> effective_static_detunings(const PhysicalParams& p) {
  return {p.delta_c + sagnac_shift(p, p.omega, Mode::ccw),
          p.delta_c + sagnac_shift(p, p.omega, Mode::cw)};
}

double thermal_occupation(double omega_m_si, double temperature_k) {
  if (temperature_k <= 0.0) return 0.0;
  const double x = constants::hbar * omega_m_si / (constants::k_boltzmann * temperature_k);
  return 1.0 / std::expm1(x);
}

double to_rad_per_s(double value, OmegaUnit unit) {
  return unit == OmegaUnit::hz ? constants::two_pi * value : value;
}

double from_rad_per_s(double omega, OmegaUnit unit) {
  return unit == OmegaUnit::hz ? omega / constants::two_pi : omega;
}

}  // namespace gyro
