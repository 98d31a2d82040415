#include <doctest.h>

#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include "generators.hpp"
#include "gyroqfi/errors.hpp"
#include "gyroqfi/integrator.hpp"
#include "gyroqfi/metrology.hpp"

using namespace gyro;
using gyro::testing::for_all;
using gyro::testing::Gen;

namespace {

const cd kI{0.0, 1.0};

GaussianState displaced(const Eigen::Matrix4cd& sigma, cd z) {
  GaussianState g;
  g.sigma = sigma;
  g.d_sens << z, 0.0, std::conj(z), 0.0;
  return g;
}

// Two-mode squeezed-vacuum-like product state: mode 1 squeezed by r1 and
// mode 2 by r2 along phases phi1, phi2.
Eigen::Matrix4cd squeezed(double r1, double phi1, double r2, double phi2) {
  Eigen::Matrix2cd x = Eigen::Matrix2cd::Zero(), y = Eigen::Matrix2cd::Zero();
  x(0, 0) = std::cosh(2 * r1);
  x(1, 1) = std::cosh(2 * r2);
  y(0, 0) = -std::exp(kI * phi1) * std::sinh(2 * r1);
  y(1, 1) = -std::exp(kI * phi2) * std::sinh(2 * r2);
  return assemble_covariance(x, y);
}

Eigen::Matrix4cd squeezed_derivative(double r1, double phi1) {
  Eigen::Matrix2cd x = Eigen::Matrix2cd::Zero(), y = Eigen::Matrix2cd::Zero();
  x(0, 0) = 2 * std::sinh(2 * r1);
  y(0, 0) = -2.0 * std::exp(kI * phi1) * std::cosh(2 * r1);
  return assemble_covariance(x, y);
}

// Output state of a short random trajectory (a physical Gaussian state).
GaussianState physical_state(Gen& g) {
  PhysicalParams p = g.params();
  p.n_bar_m = g.uniform(0.1, 3.0);
  p.epsilon = g.uniform(1.0, 10.0);
  const auto s = integrate(initial_state(p), DynamicsContext(p), DetuningSchedule::constant(p.delta_c),
                           g.uniform(1.0, 6.0), 1e-10)
                     .samples.back();
  return output_state(s, p, g.coin() ? DisplacementFrame::output : DisplacementFrame::intracavity);
}

GaussianState swap_modes(const GaussianState& g) {
  Eigen::Matrix4cd perm = Eigen::Matrix4cd::Zero();
  perm(0, 1) = perm(1, 0) = perm(2, 3) = perm(3, 2) = 1.0;
  GaussianState s;
  s.d = perm * g.d;
  s.d_sens = perm * g.d_sens;
  s.sigma = perm * g.sigma * perm;
  s.sigma_sens = perm * g.sigma_sens * perm;
  return s;
}

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

}  // namespace

TEST_CASE("vacuum in, vacuum out") {
  PhysicalParams p;
  p.epsilon = 0.0;
  const GaussianState g = output_state(initial_state(p), p);
  CHECK(g.sigma == Eigen::Matrix4cd::Identity());
  CHECK(g.d.isZero());
  const QfiResult r = qfi(g);
  CHECK(r.value == 0.0);
  CHECK(r.branch == QfiBranch::pure);
  CHECK(std::isinf(r.precision));
  CHECK(symplectic_eigenvalues(g.sigma)[0] == doctest::Approx(1.0));
}

TEST_CASE("output covariance from intracavity moments") {
  PhysicalParams p;
  p.kappa = 0.44;
  AugmentedState s;
  s.x[moment::n_a1] = 3.0;
  const GaussianState g = output_state(s, p);
  CHECK(g.sigma(0, 0).real() == doctest::Approx(2.0 * (0.44 * 3.0 + 0.5)));
  CHECK(g.sigma(2, 2).real() == doctest::Approx(2.0 * (0.44 * 3.0 + 0.5)));
  CHECK(g.sigma(1, 1).real() == 1.0);

  s.x[moment::a1_a2] = cd{0.3, -0.2};
  s.x[moment::a1d_a2d] = cd{0.3, 0.2};
  s.x[moment::a1d_a2] = cd{0.1, 0.4};
  s.x[moment::a2d_a1] = cd{0.1, -0.4};
  const GaussianState h = output_state(s, p);
  CHECK(std::abs(h.sigma(0, 3) - 0.44 * cd(0.6, -0.4)) < 1e-15);
  CHECK(std::abs(h.sigma(0, 1) - 0.88 * cd(0.1, -0.4)) < 1e-15);
  CHECK((h.sigma - h.sigma.adjoint()).norm() < 1e-15);
}

TEST_CASE("output displacement subtracts the coherent input") {
  PhysicalParams p;
  p.epsilon = 5.0;
  p.kappa = 0.44;
  AugmentedState s;
  s.amps.alpha_ccw = {2.0, -1.0};
  s.amps.alpha_cw = {0.5, 0.25};
  s.d_amps.alpha_ccw = {1e-3, 2e-3};
  const double sk = std::sqrt(0.44);
  const GaussianState out = output_state(s, p, DisplacementFrame::output);
  CHECK(std::abs(out.d[0] - (sk * s.amps.alpha_ccw - 5.0 / sk)) < 1e-14);
  CHECK(std::abs(out.d[1] - sk * s.amps.alpha_cw) < 1e-14);
  CHECK(std::abs(out.d[2] - std::conj(out.d[0])) == 0.0);
  CHECK(std::abs(out.d_sens[0] - sk * s.d_amps.alpha_ccw) < 1e-16);
  const GaussianState in = output_state(s, p, DisplacementFrame::intracavity);
  CHECK(in.d[0] == s.amps.alpha_ccw);
  CHECK(in.d_sens[0] == s.d_amps.alpha_ccw);

  p.drive = DriveDirection::cw;
  const GaussianState cw = output_state(s, p, DisplacementFrame::output);
  CHECK(std::abs(cw.d[1] - (sk * s.amps.alpha_cw - 5.0 / sk)) < 1e-14);
}

TEST_CASE("no parameter dependence, no information") {
  GaussianState g;
  g.sigma = 3.0 * Eigen::Matrix4cd::Identity();
  CHECK(qfi_mixed(g).value == 0.0);
  CHECK(qfi_pure(GaussianState{}).value == 0.0);
}

TEST_CASE("coherent displacement sensing gives 4|z|^2") {
  const cd z{0.3, -1.7};
  const GaussianState g = displaced(Eigen::Matrix4cd::Identity(), z);
  CHECK(qfi_pure(g).value == doctest::Approx(4.0 * std::norm(z)).epsilon(1e-14));
  const QfiResult r = qfi(g);
  CHECK(r.value == doctest::Approx(4.0 * std::norm(z)).epsilon(1e-14));
  CHECK(r.branch == QfiBranch::pure);
  CHECK_THROWS_AS(qfi_mixed(g), NearPureState);
}

TEST_CASE("thermal state weights the displacement term by 1/(2n+1)") {
  for (double n : {0.5, 5.0, 40.0}) {
    const cd z{1.1, 0.4};
    const GaussianState g = displaced((2 * n + 1) * Eigen::Matrix4cd::Identity(), z);
    CHECK(qfi_mixed(g).value == doctest::Approx(4.0 * std::norm(z) / (2 * n + 1)).epsilon(1e-12));
    const QfiResult r = qfi(g);
    CHECK(r.branch == QfiBranch::mixed);
    CHECK(r.value == doctest::Approx(4.0 * std::norm(z) / (2 * n + 1)).epsilon(1e-12));
    CHECK(r.min_symplectic_eigenvalue == doctest::Approx(2 * n + 1));
  }
}

TEST_CASE("pure formula on a scaled covariance derivative") {
  for (double c : {0.1, 1.0, 7.0}) {
    GaussianState g;
    g.sigma = squeezed(0.4, 0.3, 0.1, -1.0);
    g.sigma_sens = c * g.sigma;
    CHECK(qfi_pure(g).value == doctest::Approx(c * c).epsilon(1e-12));
  }
}

TEST_CASE("squeezing strength has Fisher information 2") {
  for (double r : {0.1, 0.5, 1.2}) {
    GaussianState g;
    g.sigma = squeezed(r, 0.7, 0.0, 0.0);
    g.sigma_sens = squeezed_derivative(r, 0.7);
    CHECK(qfi_pure(g).value == doctest::Approx(2.0).epsilon(1e-10));
    CHECK(qfi(g).branch == QfiBranch::pure);
  }
}

TEST_CASE("mixed formula approaches the pure one as the state purifies") {
  const double r = 0.6;
  GaussianState pure;
  pure.sigma = squeezed(r, 0.7, 0.3, -0.4);
  pure.sigma_sens = squeezed_derivative(r, 0.7);
  pure.d_sens << cd{0.2, 0.1}, cd{-0.3, 0.5}, cd{0.2, -0.1}, cd{-0.3, -0.5};
  const double f_pure = qfi_pure(pure).value;
  auto mixed_at = [&](double delta) {
    GaussianState g = pure;
    g.sigma *= 1.0 + delta;
    return qfi_mixed(g).value;
  };
  const double f3 = mixed_at(1e-3), f4 = mixed_at(1e-4), f5 = mixed_at(1e-5);
  // Linear Richardson extrapolation to delta = 0 from consecutive pairs.
  const double e34 = (10.0 * f4 - f3) / 9.0;
  const double e45 = (10.0 * f5 - f4) / 9.0;
  CHECK(rel(e45, f_pure) < 1e-4);
  CHECK(std::abs(e45 - f_pure) <= std::abs(e34 - f_pure) + 1e-9);
}

TEST_CASE("the two formulas agree across the branch boundary") {
  const QfiOptions opts;
  for (double eta : {1.0, 1.25, 1.5, 1.75, 2.0}) {
    GaussianState g;
    g.sigma = (1.0 + eta * opts.purity_tol) * squeezed(0.3, 0.2, 0.5, 1.1);
    g.sigma_sens = squeezed_derivative(0.3, 0.2);
    g.d_sens << cd{1.0, 0.5}, 0.0, cd{1.0, -0.5}, 0.0;
    const double fp = qfi_pure(g, opts).value;
    const double fm = qfi_mixed(g, opts).value;
    CHECK(std::abs(fp - fm) / fm < 1e-3);
  }
}

TEST_CASE("branch dispatch") {
  GaussianState g;
  CHECK(qfi(g).branch == QfiBranch::pure);
  g.sigma = 11.0 * Eigen::Matrix4cd::Identity();
  g.d_sens << 1.0, 0.0, 1.0, 0.0;
  CHECK(qfi(g).branch == QfiBranch::mixed);
  CHECK(to_string(QfiBranch::mixed) == std::string("mixed"));
  CHECK(to_string(QfiBranch::pure) == std::string("pure"));
}

TEST_CASE("one pure mode next to a mixed mode is handled by the mixed branch") {
  Eigen::Matrix2cd x = Eigen::Matrix2cd::Identity(), y = Eigen::Matrix2cd::Zero();
  x(0, 0) = 5.0;
  GaussianState g;
  g.sigma = assemble_covariance(x, y);
  const cd z1{0.7, 0.2}, z2{-0.3, 0.9};
  g.d_sens << z1, z2, std::conj(z1), std::conj(z2);
  const QfiResult r = qfi(g);
  CHECK(r.branch == QfiBranch::mixed);
  CHECK(r.value == doctest::Approx(4.0 * std::norm(z1) / 5.0 + 4.0 * std::norm(z2)).epsilon(1e-10));
}

TEST_CASE("non-positive covariance is rejected") {
  GaussianState g;
  g.sigma = -Eigen::Matrix4cd::Identity();
  CHECK_THROWS_AS(qfi_pure(g), NotPositiveDefinite);
  CHECK_THROWS_AS(qfi_mixed(g), NotPositiveDefinite);
}

TEST_CASE("physical states: F >= 0, zero without sensitivities, mode-swap invariant") {
  for_all(12, 41, [](Gen& g) {
    const GaussianState s = physical_state(g);
    CHECK((s.sigma - s.sigma.adjoint()).cwiseAbs().maxCoeff() <= 1e-10 * s.sigma.cwiseAbs().maxCoeff());
    CHECK(std::abs(s.d[2] - std::conj(s.d[0])) == 0.0);
    CHECK(std::abs(s.d[3] - std::conj(s.d[1])) == 0.0);
    const QfiResult r = qfi(s);
    CHECK(r.value >= 0.0);
    CHECK(r.precision * std::sqrt(r.value) == doctest::Approx(1.0).epsilon(1e-15));
    const QfiResult swapped = qfi(swap_modes(s));
    CHECK(swapped.value == doctest::Approx(r.value).epsilon(1e-8));
    GaussianState still = s;
    still.d_sens.setZero();
    still.sigma_sens.setZero();
    CHECK(qfi(still).value == 0.0);
  });
}

TEST_CASE("precision bound") {
  CHECK(precision_bound(4.0) == 0.5);
  CHECK(precision_bound(0.0) == std::numeric_limits<double>::infinity());
  for (double f : {1e-3, 2.0, 1e17}) CHECK(precision_bound(f) * std::sqrt(f) == doctest::Approx(1.0));
}

TEST_CASE("band average") {
  Gen g(42);
  std::vector<double> w{-4.0};
  while (w.size() < 12) w.push_back(w.back() + g.uniform(0.1, 1.0));
  std::vector<double> constant(w.size(), 3.5), linear;
  for (double x : w) linear.push_back(2.0 * x - 1.0);
  CHECK(average_qfi(w, constant) == doctest::Approx(3.5).epsilon(1e-14));
  const double mid = 0.5 * (w.front() + w.back());
  CHECK(average_qfi(w, linear) == doctest::Approx(2.0 * mid - 1.0).epsilon(1e-13));

  const std::vector<double> one{1.0};
  CHECK_THROWS_AS(average_qfi(one, one), TooFewSamples);
  const std::vector<double> flat{1.0, 1.0}, two{1.0, 2.0}, three{1.0, 2.0, 3.0};
  CHECK_THROWS_AS(average_qfi(flat, two), ConfigError);
  CHECK_THROWS_AS(average_qfi(two, three), ConfigError);
}

TEST_CASE("band average converges under refinement") {
  auto f = [](double w) { return 1.0 / (1.0 + (w - 1000.0) * (w - 1000.0) / 4e6) + 0.2 * std::cos(w / 3000.0); };
  auto avg = [&](int n) {
    std::vector<double> w, v;
    for (int k = 0; k < n; ++k) {
      w.push_back(-4000.0 + 8000.0 * k / (n - 1));
      v.push_back(f(w.back()));
    }
    return average_qfi(w, v);
  };
  const double a17 = avg(17), a33 = avg(33);
  CHECK(std::abs(a33 - a17) / a33 < 5e-3);
}

TEST_CASE("linear cavity: QFI is 4 kappa |d alpha / d Omega|^2") {
  for_all(20, 43, [](Gen& g) {
    PhysicalParams p;
    p.g0_override = 0.0;
    p.epsilon = g.uniform(1.0, 100.0);
    p.delta_c = g.uniform(-1.0, 1.0);
    p.omega = g.uniform(-4000.0, 4000.0);
    const DynamicsContext ctx(p);
    const cd z = kI * effective_static_detunings(p).first + 0.5 * p.kappa;
    AugmentedState s;
    s.amps.alpha_ccw = p.epsilon / z;
    s.d_amps.alpha_ccw = -kI * ctx.slope_ccw * p.epsilon / (z * z);
    const QfiResult out = state_qfi(s, p, DisplacementFrame::output);
    CHECK(rel(out.value, 4.0 * p.kappa * std::norm(s.d_amps.alpha_ccw)) < 1e-12);
    const QfiResult in = state_qfi(s, p, DisplacementFrame::intracavity);
    CHECK(rel(in.value, 4.0 * std::norm(s.d_amps.alpha_ccw)) < 1e-12);
  });
}
