#include <doctest.h>

#include <cmath>
#include <vector>

#include "generators.hpp"
#include "gyroqfi/errors.hpp"
#include "gyroqfi/integrator.hpp"
#include "gyroqfi/oracle.hpp"

using namespace gyro;
using namespace gyro::oracle;
using gyro::testing::for_all;
using gyro::testing::Gen;

namespace {

const cd kI{0.0, 1.0};

FockConfig dims(int ccw, int cw, int mech) {
  FockConfig c;
  c.n_cav_ccw = ccw;
  c.n_cav_cw = cw;
  c.n_mech = mech;
  return c;
}

double photon_number(const FockSolver& s, const DensityMatrix& rho) {
  const auto& o = s.ops();
  const SparseOp n = o.n_ccw + o.n_cw;
  return (n * rho).trace().real();
}

}  // namespace

TEST_CASE("truncation limits") {
  CHECK_NOTHROW(dims(2, 16, 8).validate());
  CHECK_THROWS_AS(dims(1, 8, 8).validate(), ConfigError);
  CHECK_THROWS_AS(dims(8, 17, 8).validate(), ConfigError);
  FockConfig c;
  c.dt = 2e-2;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c.dt = 0.0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  CHECK(dims(3, 4, 5).dimension() == 60);
}

TEST_CASE("ladder operators") {
  const Operators o(dims(3, 4, 5));
  CHECK(o.a_ccw.rows() == 60);
  // [a, a+] = 1 away from the top level.
  const SparseOp comm = SparseOp(o.b * SparseOp(o.b.adjoint())) - SparseOp(SparseOp(o.b.adjoint()) * o.b);
  const Eigen::MatrixXcd dense(comm);
  CHECK(std::abs(dense(0, 0) - 1.0) < 1e-15);
  const Eigen::MatrixXcd n(o.n_cw);
  CHECK(std::abs(n(1 * 4 * 5 + 3 * 5 + 2, 1 * 4 * 5 + 3 * 5 + 2) - 3.0) < 1e-14);
}

TEST_CASE("vacuum is stationary") {
  PhysicalParams p;
  p.epsilon = 0.0;
  const FockSolver s(p, dims(3, 3, 3));
  const DensityMatrix rho = s.initial_state();
  CHECK(s.rhs(rho, 0.5).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("backscattering swaps a photon between the modes") {
  PhysicalParams p;
  p.kappa = 0.0;
  p.gamma_m = 0.0;
  p.epsilon = 0.0;
  p.g0_override = 0.0;
  p.backscatter_J = 0.3;
  p.omega = 0.0;
  const FockSolver s(p, dims(3, 3, 2));
  std::vector<double> times;
  for (int k = 1; k <= 10; ++k) times.push_back(0.5 * k);
  const auto out = s.evolve(s.fock_state(1, 0, 0), DetuningSchedule::constant(0.0), 5.0, times);
  for (const auto& smp : out) {
    CHECK(smp.x[moment::n_a1].real() == doctest::Approx(std::pow(std::cos(0.3 * smp.t), 2)).epsilon(1e-9));
    CHECK(smp.x[moment::n_a2].real() == doctest::Approx(std::pow(std::sin(0.3 * smp.t), 2)).epsilon(1e-9));
  }
}

TEST_CASE("closed system conserves the photon number") {
  PhysicalParams p;
  p.kappa = 0.0;
  p.gamma_m = 0.0;
  p.epsilon = 0.0;
  p.g0_override = 0.05;
  p.backscatter_J = 0.2;
  p.omega = 1000.0;
  const FockSolver s(p, dims(4, 4, 6));
  DensityMatrix rho = 0.5 * s.fock_state(2, 0, 1) + 0.5 * s.fock_state(0, 1, 0);
  const double n0 = photon_number(s, rho);
  s.advance(rho, 0.0, 5.0, 0.3);
  CHECK(std::abs(photon_number(s, rho) - n0) < 1e-8);
}

TEST_CASE("mechanical relaxation towards the bath occupation") {
  PhysicalParams p;
  p.epsilon = 0.0;
  p.n_bar_m = 0.5;
  p.gamma_m = 0.05;
  const FockSolver s(p, dims(2, 2, 16));
  std::vector<double> times{5.0, 10.0, 20.0, 40.0};
  const auto out = s.evolve(s.initial_state(InitialPhonons::cold), DetuningSchedule::constant(0.5), 40.0, times);
  for (const auto& smp : out) {
    const double expect = 0.5 * (1.0 - std::exp(-p.gamma_m * smp.t));
    CHECK(std::abs(smp.x[moment::n_b].real() - expect) < 1e-6);
  }
}

TEST_CASE("linear cavity field follows the driven-damped solution") {
  PhysicalParams p;
  p.g0_override = 0.0;
  p.epsilon = 0.2;
  p.delta_c = 0.3;
  p.omega = 0.0;
  const FockSolver s(p, dims(10, 2, 2));
  std::vector<double> times{1.0, 2.0, 4.0, 8.0};
  const auto out = s.evolve(s.initial_state(), DetuningSchedule::constant(0.3), 8.0, times);
  const cd z = kI * 0.3 + 0.5 * p.kappa;
  for (const auto& smp : out) {
    const cd expect = p.epsilon / z * (1.0 - std::exp(-z * smp.t));
    CHECK(std::abs(smp.amps.alpha_ccw - expect) < 1e-8);
    CHECK(std::abs(smp.amps.alpha_cw) < 1e-12);
    // A coherent state has no fluctuations.
    CHECK(std::abs(smp.x[moment::n_a1]) < 1e-8);
  }
}

TEST_CASE("density matrix stays a state") {
  PhysicalParams p;
  p.g0_override = 0.03;
  p.epsilon = 0.1;
  p.n_bar_m = 0.2;
  p.backscatter_J = 0.1;
  p.omega = 2000.0;
  const FockSolver s(p, dims(6, 4, 7));
  DensityMatrix rho = s.initial_state();
  s.advance(rho, 0.0, 4.0, 0.5);
  CHECK(std::abs(rho.trace() - 1.0) < 4e-8);
  CHECK((rho - rho.adjoint()).cwiseAbs().maxCoeff() < 1e-10);
  CHECK(rho.diagonal().real().minCoeff() > -1e-10);
  const Sample smp = s.measure(rho, 4.0);
  CHECK(smp.trace == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(smp.top_level_population < 1e-4);
}

TEST_CASE("leakage into the top level is reported") {
  PhysicalParams p;
  p.g0_override = 0.0;
  p.epsilon = 3.0;
  const FockSolver s(p, dims(3, 2, 2));
  DensityMatrix rho = s.initial_state();
  CHECK_THROWS_AS(s.advance(rho, 0.0, 5.0, 0.0), TruncationLeak);
}

TEST_CASE("step refinement does not change the result") {
  PhysicalParams p;
  p.g0_override = 0.02;
  p.epsilon = 0.2;
  FockConfig a = dims(5, 3, 5), b = a;
  b.dt = a.dt / 2;
  const FockSolver sa(p, a), sb(p, b);
  DensityMatrix ra = sa.initial_state(), rb = sb.initial_state();
  sa.advance(ra, 0.0, 3.0, 0.5);
  sb.advance(rb, 0.0, 3.0, 0.5);
  CHECK((ra - rb).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("moment solver agrees with the Fock solver at weak coupling") {
  for_all(3, 51, [](Gen& g) {
    PhysicalParams p;
    p.g0_override = g.uniform(0.005, 0.02);
    p.epsilon = g.uniform(0.05, 0.15);
    p.delta_c = g.uniform(-1.0, 1.0);
    p.backscatter_J = g.uniform(0.0, 0.2);
    p.omega = 0.0;
    p.drive = g.coin() ? DriveDirection::ccw : DriveDirection::cw;
    const FockSolver fock(p, dims(6, 6, 6));
    const std::vector<double> times{1.0, 2.0, 3.0};
    const auto sched = DetuningSchedule::constant(p.delta_c);
    const auto ref = fock.evolve(fock.initial_state(), sched, 3.0, times);
    const auto mom = integrate(initial_state(p), DynamicsContext(p), sched, 3.0, 1e-10, times);
    REQUIRE(ref.size() == mom.samples.size());
    for (std::size_t k = 0; k < ref.size(); ++k) {
      const auto& a = ref[k];
      const auto& b = mom.samples[k];
      CHECK(std::abs(a.amps.alpha_ccw - b.amps.alpha_ccw) < 1e-3);
      CHECK(std::abs(a.amps.alpha_cw - b.amps.alpha_cw) < 1e-3);
      CHECK(std::abs(a.amps.beta - b.amps.beta) < 1e-3);
      for (int i = 0; i < kNumMoments; ++i) CHECK(std::abs(a.x[i] - b.x[i]) < 1e-3);
    }
  });
}

TEST_CASE("samples convert to states with zero sensitivities") {
  PhysicalParams p;
  p.g0_override = 0.02;
  p.epsilon = 0.2;
  const FockSolver s(p, dims(4, 3, 4));
  const auto out = s.evolve(s.initial_state(), DetuningSchedule::constant(0.5), 1.0, std::vector<double>{0.5});
  const auto states = to_states(out);
  REQUIRE(states.size() == 3);
  CHECK(states[1].t == 0.5);
  CHECK(states[2].amps.alpha_ccw == out[2].amps.alpha_ccw);
  CHECK(states[2].x == out[2].x);
  CHECK(states[2].dx.isZero());
}
