#include "gyroqfi/dynamics.hpp"

#include <algorithm>
#include <cmath>

#include "gyroqfi/errors.hpp"

namespace gyro {

namespace {

constexpr cd kI{0.0, 1.0};

struct Drive {
  double ccw;
  double cw;
};

Drive drive_amplitudes(const PhysicalParams& p) {
  return p.drive == DriveDirection::ccw ? Drive{p.epsilon, 0.0} : Drive{0.0, p.epsilon};
}

SymbolValues symbol_values(cd g_ccw, cd g_cw, double det_ccw, double det_cw) {
  SymbolValues s;
  s.v = {cd{1.0, 0.0}, g_ccw, std::conj(g_ccw), g_cw, std::conj(g_cw), cd{det_ccw, 0.0},
         cd{det_cw, 0.0}};
  return s;
}

SymbolValues symbol_derivatives(cd dg_ccw, cd dg_cw, double ddet_ccw, double ddet_cw) {
  SymbolValues s = symbol_values(dg_ccw, dg_cw, ddet_ccw, ddet_cw);
  s.v[0] = cd{0.0, 0.0};
  return s;
}

}  // namespace

StateVector AugmentedState::pack() const {
  StateVector v;
  v[0] = amps.alpha_ccw;
  v[1] = amps.alpha_cw;
  v[2] = amps.beta;
  v.segment<kNumMoments>(3) = x;
  v[24] = d_amps.alpha_ccw;
  v[25] = d_amps.alpha_cw;
  v[26] = d_amps.beta;
  v.segment<kNumMoments>(27) = dx;
  return v;
}

AugmentedState AugmentedState::unpack(const StateVector& v, double t) {
  AugmentedState s;
  s.amps = {v[0], v[1], v[2]};
  s.x = v.segment<kNumMoments>(3);
  s.d_amps = {v[24], v[25], v[26]};
  s.dx = v.segment<kNumMoments>(27);
  s.t = t;
  return s;
}

DetuningSchedule::DetuningSchedule(std::vector<Breakpoint> breakpoints)
    : breakpoints_(std::move(breakpoints)) {
  if (breakpoints_.empty()) throw ConfigError("detuning schedule must be nonempty");
  for (std::size_t k = 0; k < breakpoints_.size(); ++k) {
    if (!std::isfinite(breakpoints_[k].t_start) || !std::isfinite(breakpoints_[k].delta_c))
      throw ConfigError("detuning schedule entries must be finite");
    if (k > 0 && !(breakpoints_[k].t_start > breakpoints_[k - 1].t_start))
      throw ConfigError("detuning schedule breakpoints must be strictly increasing");
  }
}

DetuningSchedule DetuningSchedule::constant(double delta_c) {
  return DetuningSchedule({{0.0, delta_c}});
}

double DetuningSchedule::value_at(double t) const {
  // Last breakpoint with t_start <= t; times before the first use the first.
  auto it = std::upper_bound(breakpoints_.begin(), breakpoints_.end(), t,
                             [](double tt, const Breakpoint& b) { return tt < b.t_start; });
  if (it == breakpoints_.begin()) return breakpoints_.front().delta_c;
  return std::prev(it)->delta_c;
}

AugmentedState initial_state(const PhysicalParams& p, InitialPhonons phonons) {
  AugmentedState s;
  if (phonons == InitialPhonons::thermal) s.x[moment::n_b] = p.n_bar_m;
  return s;
}

DriftStencil::DriftStencil(const PhysicalParams& p) {
  using S = Symbol;
  const double k = p.kappa;
  const double gm = p.gamma_m;
  const double wm = 1.0;  // omega_m in its own units
  const cd iJ = kI * p.backscatter_J;
  const double kg = 0.5 * (k + gm);
  auto add = [this](int r, int c, S s, cd coef) { entries_.push_back({r, c, s, coef}); };

  // Row order and column placement follow the moment ordering of MomentVector.
  add(0, 0, S::one, -k);
  add(0, 9, S::one, -iJ);
  add(0, 10, S::one, iJ);
  add(0, 13, S::g_ccw, kI);
  add(0, 14, S::g_ccw_conj, -kI);
  add(0, 15, S::g_ccw, kI);
  add(0, 16, S::g_ccw_conj, -kI);

  add(1, 1, S::one, -k);
  add(1, 9, S::one, iJ);
  add(1, 10, S::one, -iJ);
  add(1, 17, S::g_cw, kI);
  add(1, 18, S::g_cw_conj, -kI);
  add(1, 19, S::g_cw, kI);
  add(1, 20, S::g_cw_conj, -kI);

  add(2, 2, S::one, -gm);
  add(2, 13, S::g_ccw, -kI);
  add(2, 14, S::g_ccw_conj, kI);
  add(2, 15, S::g_ccw, kI);
  add(2, 16, S::g_ccw_conj, -kI);
  add(2, 17, S::g_cw, -kI);
  add(2, 18, S::g_cw_conj, kI);
  add(2, 19, S::g_cw, kI);
  add(2, 20, S::g_cw_conj, -kI);

  // h3 = 2i D1 - kappa
  add(3, 3, S::det_ccw, 2.0 * kI);
  add(3, 3, S::one, -k);
  add(3, 11, S::one, 2.0 * iJ);
  add(3, 13, S::g_ccw_conj, -2.0 * kI);
  add(3, 15, S::g_ccw_conj, -2.0 * kI);

  // h4 = -(2i D1 + kappa)
  add(4, 4, S::det_ccw, -2.0 * kI);
  add(4, 4, S::one, -k);
  add(4, 12, S::one, -2.0 * iJ);
  add(4, 14, S::g_ccw, 2.0 * kI);
  add(4, 16, S::g_ccw, 2.0 * kI);

  add(5, 5, S::det_cw, 2.0 * kI);
  add(5, 5, S::one, -k);
  add(5, 11, S::one, 2.0 * iJ);
  add(5, 17, S::g_cw_conj, -2.0 * kI);
  add(5, 19, S::g_cw_conj, -2.0 * kI);

  add(6, 6, S::det_cw, -2.0 * kI);
  add(6, 6, S::one, -k);
  add(6, 12, S::one, -2.0 * iJ);
  add(6, 18, S::g_cw, 2.0 * kI);
  add(6, 20, S::g_cw, 2.0 * kI);

  // h7 = 2i wm - gamma_m
  add(7, 7, S::one, 2.0 * kI * wm - gm);
  add(7, 14, S::g_ccw_conj, -2.0 * kI);
  add(7, 15, S::g_ccw, -2.0 * kI);
  add(7, 18, S::g_cw_conj, -2.0 * kI);
  add(7, 19, S::g_cw, -2.0 * kI);

  // h8 = -(2i wm + gamma_m)
  add(8, 8, S::one, -2.0 * kI * wm - gm);
  add(8, 13, S::g_ccw, 2.0 * kI);
  add(8, 16, S::g_ccw_conj, 2.0 * kI);
  add(8, 17, S::g_cw, 2.0 * kI);
  add(8, 20, S::g_cw_conj, 2.0 * kI);

  // h9 = i(D1 - D2) - kappa
  add(9, 0, S::one, -iJ);
  add(9, 1, S::one, iJ);
  add(9, 9, S::det_ccw, kI);
  add(9, 9, S::det_cw, -kI);
  add(9, 9, S::one, -k);
  add(9, 13, S::g_cw, kI);
  add(9, 15, S::g_cw, kI);
  add(9, 18, S::g_ccw_conj, -kI);
  add(9, 20, S::g_ccw_conj, -kI);

  // h10 = -i(D1 - D2) - kappa
  add(10, 0, S::one, iJ);
  add(10, 1, S::one, -iJ);
  add(10, 10, S::det_ccw, -kI);
  add(10, 10, S::det_cw, kI);
  add(10, 10, S::one, -k);
  add(10, 14, S::g_cw_conj, -kI);
  add(10, 16, S::g_cw_conj, -kI);
  add(10, 17, S::g_ccw, kI);
  add(10, 19, S::g_ccw, kI);

  // h11 = i(D1 + D2) - kappa
  add(11, 3, S::one, iJ);
  add(11, 5, S::one, iJ);
  add(11, 11, S::det_ccw, kI);
  add(11, 11, S::det_cw, kI);
  add(11, 11, S::one, -k);
  add(11, 13, S::g_cw_conj, -kI);
  add(11, 15, S::g_cw_conj, -kI);
  add(11, 17, S::g_ccw_conj, -kI);
  add(11, 19, S::g_ccw_conj, -kI);

  // h12 = -i(D1 + D2) - kappa
  add(12, 4, S::one, -iJ);
  add(12, 6, S::one, -iJ);
  add(12, 12, S::det_ccw, -kI);
  add(12, 12, S::det_cw, -kI);
  add(12, 12, S::one, -k);
  add(12, 14, S::g_cw, kI);
  add(12, 16, S::g_cw, kI);
  add(12, 18, S::g_ccw, kI);
  add(12, 20, S::g_ccw, kI);

  // h13 = i(D1 - wm) - (kappa + gamma_m)/2
  add(13, 0, S::g_ccw_conj, kI);
  add(13, 2, S::g_ccw_conj, -kI);
  add(13, 3, S::g_ccw, kI);
  add(13, 8, S::g_ccw_conj, -kI);
  add(13, 9, S::g_cw_conj, kI);
  add(13, 11, S::g_cw, kI);
  add(13, 13, S::det_ccw, kI);
  add(13, 13, S::one, -kI * wm - kg);
  add(13, 17, S::one, iJ);

  // h14 = -i(D1 - wm) - (kappa + gamma_m)/2
  add(14, 0, S::g_ccw, -kI);
  add(14, 2, S::g_ccw, kI);
  add(14, 4, S::g_ccw_conj, -kI);
  add(14, 7, S::g_ccw, kI);
  add(14, 10, S::g_cw, -kI);
  add(14, 12, S::g_cw_conj, -kI);
  add(14, 14, S::det_ccw, -kI);
  add(14, 14, S::one, kI * wm - kg);
  add(14, 18, S::one, -iJ);

  // h15 = i(D1 + wm) - (kappa + gamma_m)/2
  add(15, 0, S::g_ccw_conj, -kI);
  add(15, 2, S::g_ccw_conj, -kI);
  add(15, 3, S::g_ccw, -kI);
  add(15, 7, S::g_ccw_conj, -kI);
  add(15, 9, S::g_cw_conj, -kI);
  add(15, 11, S::g_cw, -kI);
  add(15, 15, S::det_ccw, kI);
  add(15, 15, S::one, kI * wm - kg);
  add(15, 19, S::one, iJ);

  // h16 = -i(D1 + wm) - (kappa + gamma_m)/2
  add(16, 0, S::g_ccw, kI);
  add(16, 2, S::g_ccw, kI);
  add(16, 4, S::g_ccw_conj, kI);
  add(16, 8, S::g_ccw, kI);
  add(16, 10, S::g_cw, kI);
  add(16, 12, S::g_cw_conj, kI);
  add(16, 16, S::det_ccw, -kI);
  add(16, 16, S::one, -kI * wm - kg);
  add(16, 20, S::one, -iJ);

  // h17 = i(D2 - wm) - (kappa + gamma_m)/2
  add(17, 1, S::g_cw_conj, kI);
  add(17, 2, S::g_cw_conj, -kI);
  add(17, 5, S::g_cw, kI);
  add(17, 8, S::g_cw_conj, -kI);
  add(17, 10, S::g_ccw_conj, kI);
  add(17, 11, S::g_ccw, kI);
  add(17, 13, S::one, iJ);
  add(17, 17, S::det_cw, kI);
  add(17, 17, S::one, -kI * wm - kg);

  // h18 = -i(D2 - wm) - (kappa + gamma_m)/2
  add(18, 1, S::g_cw, -kI);
  add(18, 2, S::g_cw, kI);
  add(18, 6, S::g_cw_conj, -kI);
  add(18, 7, S::g_cw, kI);
  add(18, 9, S::g_ccw, -kI);
  add(18, 12, S::g_ccw_conj, -kI);
  add(18, 14, S::one, -iJ);
  add(18, 18, S::det_cw, -kI);
  add(18, 18, S::one, kI * wm - kg);

  // h19 = i(D2 + wm) - (kappa + gamma_m)/2
  add(19, 1, S::g_cw_conj, -kI);
  add(19, 2, S::g_cw_conj, -kI);
  add(19, 5, S::g_cw, -kI);
  add(19, 7, S::g_cw_conj, -kI);
  add(19, 10, S::g_ccw_conj, -kI);
  add(19, 11, S::g_ccw, -kI);
  add(19, 15, S::one, iJ);
  add(19, 19, S::det_cw, kI);
  add(19, 19, S::one, kI * wm - kg);

  // h20 = -i(D2 + wm) - (kappa + gamma_m)/2
  add(20, 1, S::g_cw, kI);
  add(20, 2, S::g_cw, kI);
  add(20, 6, S::g_cw_conj, kI);
  add(20, 8, S::g_cw, kI);
  add(20, 9, S::g_ccw, kI);
  add(20, 12, S::g_ccw_conj, kI);
  add(20, 16, S::one, -iJ);
  add(20, 20, S::det_cw, -kI);
  add(20, 20, S::one, -kI * wm - kg);

  // Entries with J = 0 are kept; they cost nothing and keep the pattern fixed.
}

DynamicsContext::DynamicsContext(const PhysicalParams& p)
    : params(p),
      g0(single_photon_coupling(p)),
      slope_ccw(detuning_slope(p, Mode::ccw)),
      slope_cw(detuning_slope(p, Mode::cw)),
      stencil(p) {}

double effective_detuning(double static_detuning, double g0, cd beta) {
  return static_detuning - 2.0 * g0 * beta.real();
}

ClassicalAmplitudes classical_rhs(const ClassicalAmplitudes& amps, const PhysicalParams& p,
                                  double delta_c_now, double omega) {
  const double g0 = single_photon_coupling(p);
  const Drive eps = drive_amplitudes(p);
  const double det_ccw =
      effective_detuning(delta_c_now + sagnac_shift(p, omega, Mode::ccw), g0, amps.beta);
  const double det_cw =
      effective_detuning(delta_c_now + sagnac_shift(p, omega, Mode::cw), g0, amps.beta);
  const double half_k = 0.5 * p.kappa;
  const cd iJ = kI * p.backscatter_J;

  ClassicalAmplitudes d;
  d.alpha_ccw = -(kI * det_ccw + half_k) * amps.alpha_ccw - iJ * amps.alpha_cw + eps.ccw;
  d.alpha_cw = -(kI * det_cw + half_k) * amps.alpha_cw - iJ * amps.alpha_ccw + eps.cw;
  d.beta = -(kI + 0.5 * p.gamma_m) * amps.beta +
           kI * g0 * (std::norm(amps.alpha_ccw) + std::norm(amps.alpha_cw));
  return d;
}

DriftMatrix build_drift_matrix(const ClassicalAmplitudes& amps, const PhysicalParams& p,
                               double delta_c_now, double omega) {
  const double g0 = single_photon_coupling(p);
  const double det_ccw =
      effective_detuning(delta_c_now + sagnac_shift(p, omega, Mode::ccw), g0, amps.beta);
  const double det_cw =
      effective_detuning(delta_c_now + sagnac_shift(p, omega, Mode::cw), g0, amps.beta);
  const SymbolValues sym = symbol_values(g0 * amps.alpha_ccw, g0 * amps.alpha_cw, det_ccw, det_cw);

  DriftMatrix a = DriftMatrix::Zero();
  for (const auto& e : DriftStencil(p).entries()) a(e.row, e.col) += e.coef * sym[e.symbol];
  return a;
}

MomentVector build_inhomogeneous(const ClassicalAmplitudes& amps, const PhysicalParams& p) {
  const double g0 = single_photon_coupling(p);
  const cd g_ccw = g0 * amps.alpha_ccw;
  const cd g_cw = g0 * amps.alpha_cw;
  MomentVector d = MomentVector::Zero();
  d[moment::n_b] = p.gamma_m * p.n_bar_m;
  d[moment::a1d_bd] = -kI * std::conj(g_ccw);
  d[moment::a1_b] = kI * g_ccw;
  d[moment::a2d_bd] = -kI * std::conj(g_cw);
  d[moment::a2_b] = kI * g_cw;
  return d;
}

void sensitivity_rhs_packed(const StateVector& y, const DynamicsContext& ctx, double delta_c_now,
                            StateVector& dydt) {
  const PhysicalParams& p = ctx.params;
  const double g0 = ctx.g0;
  const Drive eps = drive_amplitudes(p);
  const double half_k = 0.5 * p.kappa;
  const cd iJ = kI * p.backscatter_J;

  const cd a1 = y[0], a2 = y[1], beta = y[2];
  const cd da1 = y[24], da2 = y[25], dbeta = y[26];

  const double shift = 2.0 * g0 * beta.real();
  const double det1 = delta_c_now + ctx.slope_ccw * p.omega - shift;
  const double det2 = delta_c_now + ctx.slope_cw * p.omega - shift;
  const double dshift = 2.0 * g0 * dbeta.real();
  const double ddet1 = ctx.slope_ccw - dshift;
  const double ddet2 = ctx.slope_cw - dshift;

  // Mean fields and their Omega-derivatives.
  dydt[0] = -(kI * det1 + half_k) * a1 - iJ * a2 + eps.ccw;
  dydt[1] = -(kI * det2 + half_k) * a2 - iJ * a1 + eps.cw;
  dydt[2] = -(kI + 0.5 * p.gamma_m) * beta + kI * g0 * (std::norm(a1) + std::norm(a2));
  dydt[24] = -(kI * det1 + half_k) * da1 - kI * ddet1 * a1 - iJ * da2;
  dydt[25] = -(kI * det2 + half_k) * da2 - kI * ddet2 * a2 - iJ * da1;
  dydt[26] = -(kI + 0.5 * p.gamma_m) * dbeta +
             2.0 * kI * g0 * (std::conj(a1) * da1 + std::conj(a2) * da2).real();

  const cd g1 = g0 * a1, g2 = g0 * a2;
  const cd dg1 = g0 * da1, dg2 = g0 * da2;
  const SymbolValues sym = symbol_values(g1, g2, det1, det2);
  const SymbolValues dsym = symbol_derivatives(dg1, dg2, ddet1, ddet2);

  const cd* x = y.data() + 3;
  const cd* dx = y.data() + 27;
  cd* xo = dydt.data() + 3;
  cd* dxo = dydt.data() + 27;
  for (int i = 0; i < kNumMoments; ++i) {
    xo[i] = 0.0;
    dxo[i] = 0.0;
  }
  for (const auto& e : ctx.stencil.entries()) {
    const int s = static_cast<int>(e.symbol);
    const cd a = e.coef * sym.v[s];
    xo[e.row] += a * x[e.col];
    dxo[e.row] += a * dx[e.col];
    if (s != 0) dxo[e.row] += e.coef * dsym.v[s] * x[e.col];
  }

  xo[moment::n_b] += p.gamma_m * p.n_bar_m;
  xo[moment::a1d_bd] += -kI * std::conj(g1);
  xo[moment::a1_b] += kI * g1;
  xo[moment::a2d_bd] += -kI * std::conj(g2);
  xo[moment::a2_b] += kI * g2;
  dxo[moment::a1d_bd] += -kI * std::conj(dg1);
  dxo[moment::a1_b] += kI * dg1;
  dxo[moment::a2d_bd] += -kI * std::conj(dg2);
  dxo[moment::a2_b] += kI * dg2;
}

AugmentedState sensitivity_rhs(const AugmentedState& s, const DynamicsContext& ctx,
                               double delta_c_now) {
  StateVector d;
  sensitivity_rhs_packed(s.pack(), ctx, delta_c_now, d);
  return AugmentedState::unpack(d, s.t);
}

}  // namespace gyro
