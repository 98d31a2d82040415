#include "gyroqfi/metrology.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <limits>

#include "gyroqfi/errors.hpp"

namespace gyro {

namespace {

using Mat16 = Eigen::Matrix<cd, 16, 16>;
using Vec16 = Eigen::Matrix<cd, 16, 1>;

const Eigen::Vector4d kSymplecticDiag(1.0, 1.0, -1.0, -1.0);

// Output-field blocks for the moment vector `m` scaled by `scale`; the
// constant vacuum part is added by the caller.
void output_blocks(const MomentVector& m, double scale, Eigen::Matrix2cd& x, Eigen::Matrix2cd& y) {
  using namespace moment;
  // Conjugate pairs are averaged so the result is Hermitian by construction.
  const cd cross = 0.5 * (m[a2d_a1] + std::conj(m[a1d_a2]));  // <a2+ a1>
  x(0, 0) = 2.0 * scale * m[n_a1].real();
  x(1, 1) = 2.0 * scale * m[n_a2].real();
  x(0, 1) = 2.0 * scale * cross;
  x(1, 0) = std::conj(x(0, 1));
  y(0, 0) = scale * (m[a1_a1] + std::conj(m[a1d_a1d]));
  y(1, 1) = scale * (m[a2_a2] + std::conj(m[a2d_a2d]));
  y(0, 1) = scale * (m[a1_a2] + std::conj(m[a1d_a2d]));
  y(1, 0) = y(0, 1);
}

Eigen::Vector4cd displacement(cd a1, cd a2) { return {a1, a2, std::conj(a1), std::conj(a2)}; }

// 2 (dd)+ sigma^-1 (dd), with sigma already factored.
double displacement_term(const Eigen::LLT<Eigen::Matrix4cd>& llt, const Eigen::Vector4cd& dd) {
  return 2.0 * dd.dot(llt.solve(dd)).real();
}

Eigen::LLT<Eigen::Matrix4cd> factor(const Eigen::Matrix4cd& sigma) {
  Eigen::LLT<Eigen::Matrix4cd> llt(sigma);
  if (llt.info() != Eigen::Success) throw NotPositiveDefinite("covariance matrix is not positive definite");
  return llt;
}

QfiResult finish(double value, QfiBranch branch, double min_nu) {
  QfiResult r;
  r.value = std::max(0.0, value);
  r.branch = branch;
  r.precision = precision_bound(r.value);
  r.min_symplectic_eigenvalue = min_nu;
  return r;
}

}  // namespace

const char* to_string(QfiBranch b) { return b == QfiBranch::mixed ? "mixed" : "pure"; }

Eigen::Matrix4cd assemble_covariance(const Eigen::Matrix2cd& x_block, const Eigen::Matrix2cd& y_block) {
  Eigen::Matrix4cd s;
  s.topLeftCorner<2, 2>() = x_block;
  s.topRightCorner<2, 2>() = y_block;
  s.bottomLeftCorner<2, 2>() = y_block.conjugate();
  s.bottomRightCorner<2, 2>() = x_block.conjugate();
  return s;
}

GaussianState output_state(const AugmentedState& s, const PhysicalParams& p,
                           DisplacementFrame frame) {
  const double k = p.kappa;
  const double sk = std::sqrt(k);

  GaussianState g;
  Eigen::Matrix2cd x, y;
  output_blocks(s.x, k, x, y);
  x += Eigen::Matrix2cd::Identity();
  g.sigma = assemble_covariance(x, y);
  output_blocks(s.dx, k, x, y);
  g.sigma_sens = assemble_covariance(x, y);

  if (frame == DisplacementFrame::output) {
    const double in_ccw = p.drive == DriveDirection::ccw ? p.epsilon / sk : 0.0;
    const double in_cw = p.drive == DriveDirection::cw ? p.epsilon / sk : 0.0;
    g.d = displacement(sk * s.amps.alpha_ccw - in_ccw, sk * s.amps.alpha_cw - in_cw);
    g.d_sens = displacement(sk * s.d_amps.alpha_ccw, sk * s.d_amps.alpha_cw);
  } else {
    g.d = displacement(s.amps.alpha_ccw, s.amps.alpha_cw);
    g.d_sens = displacement(s.d_amps.alpha_ccw, s.d_amps.alpha_cw);
  }
  return g;
}

std::array<double, 2> symplectic_eigenvalues(const Eigen::Matrix4cd& sigma) {
  const Eigen::Matrix4cd ks = kSymplecticDiag.cast<cd>().asDiagonal() * sigma;
  Eigen::ComplexEigenSolver<Eigen::Matrix4cd> es(ks, false);
  std::array<double, 4> mags{};
  for (int i = 0; i < 4; ++i) mags[i] = std::abs(es.eigenvalues()[i]);
  std::sort(mags.begin(), mags.end());
  return {0.5 * (mags[0] + mags[1]), 0.5 * (mags[2] + mags[3])};
}

QfiResult qfi_mixed(const GaussianState& g, const QfiOptions& opts) {
  const auto llt = factor(g.sigma);

  Mat16 m;
  const Eigen::Matrix4cd sc = g.sigma.conjugate();
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) {
      m.block<4, 4>(4 * i, 4 * j) = sc(i, j) * g.sigma;
      if (i == j) m.block<4, 4>(4 * i, 4 * j).diagonal() -= kSymplecticDiag[i] * kSymplecticDiag.cast<cd>();
    }

  // Column-stacking vectorisation.
  const Vec16 v = Eigen::Map<const Vec16>(g.sigma_sens.data());

  Eigen::JacobiSVD<Mat16> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  const double cutoff = opts.svd_cutoff * sv[0];
  int dropped = 0;
  Vec16 coeff = svd.matrixU().adjoint() * v;
  for (int i = 0; i < 16; ++i) {
    if (sv[i] <= cutoff) {
      coeff[i] = 0.0;
      ++dropped;
    } else {
      coeff[i] /= sv[i];
    }
  }
  if (dropped > 4) throw NearPureState("Kronecker system is singular: state is (nearly) pure");
  const Vec16 sol = svd.matrixV() * coeff;

  const double cov_term = 0.5 * v.dot(sol).real();
  const double value = cov_term + displacement_term(llt, g.d_sens);
  return finish(value, QfiBranch::mixed, symplectic_eigenvalues(g.sigma)[0]);
}

QfiResult qfi_pure(const GaussianState& g, const QfiOptions&) {
  const auto llt = factor(g.sigma);
  const Eigen::Matrix4cd w = llt.solve(g.sigma_sens);
  const double cov_term = 0.25 * (w * w).trace().real();
  const double value = cov_term + displacement_term(llt, g.d_sens);
  return finish(value, QfiBranch::pure, symplectic_eigenvalues(g.sigma)[0]);
}

QfiResult qfi(const GaussianState& g, const QfiOptions& opts) {
  const auto nu = symplectic_eigenvalues(g.sigma);
  if (nu[1] < 1.0 + opts.purity_tol) return qfi_pure(g, opts);
  try {
    return qfi_mixed(g, opts);
  } catch (const NearPureState&) {
    return qfi_pure(g, opts);
  }
}

double precision_bound(double fisher) {
  if (!(fisher > 0.0)) return std::numeric_limits<double>::infinity();
  return 1.0 / std::sqrt(fisher);
}

double average_qfi(std::span<const double> omegas, std::span<const double> fisher) {
  if (omegas.size() != fisher.size()) throw ConfigError("average_qfi: size mismatch");
  if (omegas.size() < 2) throw TooFewSamples("average_qfi needs at least two samples");
  double integral = 0.0;
  for (std::size_t i = 1; i < omegas.size(); ++i) {
    const double h = omegas[i] - omegas[i - 1];
    if (!(h > 0.0)) throw ConfigError("average_qfi: Omega grid must be strictly increasing");
    integral += 0.5 * h * (fisher[i] + fisher[i - 1]);
  }
  return integral / (omegas.back() - omegas.front());
}

QfiResult state_qfi(const AugmentedState& s, const PhysicalParams& p, DisplacementFrame frame,
                    const QfiOptions& opts) {
  return qfi(output_state(s, p, frame), opts);
}

}  // namespace gyro
