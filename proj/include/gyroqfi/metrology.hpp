#pragma once

#include <Eigen/Dense>
#include <array>
#include <span>

#include "gyroqfi/dynamics.hpp"
#include "gyroqfi/model.hpp"

namespace gyro {

/// Which mean field enters the displacement term of the QFI.
/// `output`: d = sqrt(kappa) alpha - alpha_in of the transmitted field.
/// `intracavity`: d = alpha (literal intracavity displacement).
enum class DisplacementFrame { output, intracavity };

/// Two-mode Gaussian state in the complex basis (a_ccw, a_cw, a_ccw+, a_cw+),
/// with sigma_ij = <{dA_i, dA_j+}> (vacuum = identity) and the Omega-derivatives
/// of both moments, per rad/s.
struct GaussianState {
  Eigen::Vector4cd d = Eigen::Vector4cd::Zero();
  Eigen::Matrix4cd sigma = Eigen::Matrix4cd::Identity();
  Eigen::Vector4cd d_sens = Eigen::Vector4cd::Zero();
  Eigen::Matrix4cd sigma_sens = Eigen::Matrix4cd::Zero();
};

enum class QfiBranch { mixed, pure };

struct QfiResult {
  double value = 0.0;  // 1/(rad/s)^2
  QfiBranch branch = QfiBranch::pure;
  double precision = 0.0;  // 1/sqrt(F) in rad/s; infinite when F = 0
  double min_symplectic_eigenvalue = 1.0;
};

struct QfiOptions {
  double purity_tol = 1e-6;
  /// Singular values of M below this fraction of the largest are dropped.
  double svd_cutoff = 1e-10;
};

const char* to_string(QfiBranch b);

/// Builds sigma from the two blocks X and Y as [[X, Y], [Y*, X*]].
Eigen::Matrix4cd assemble_covariance(const Eigen::Matrix2cd& x_block, const Eigen::Matrix2cd& y_block);

/// Output-field Gaussian state from a trajectory sample via input-output
/// relations with vacuum input noise and a coherent drive on the pumped port.
GaussianState output_state(const AugmentedState& s, const PhysicalParams& p,
                           DisplacementFrame frame = DisplacementFrame::output);

/// Symplectic eigenvalues (ascending) as the absolute eigenvalues of K sigma,
/// K = diag(1, 1, -1, -1), with each +/- pair reported once.
std::array<double, 2> symplectic_eigenvalues(const Eigen::Matrix4cd& sigma);

/// Mixed-state QFI via the Kronecker system M = conj(sigma) (x) sigma - K (x) K.
/// Throws NearPureState when more than four singular values of M vanish and
/// NotPositiveDefinite when sigma has no Cholesky factor.
QfiResult qfi_mixed(const GaussianState& g, const QfiOptions& opts = {});

/// Pure-state QFI: Tr(sigma^-1 dsigma sigma^-1 dsigma)/4 + displacement term.
QfiResult qfi_pure(const GaussianState& g, const QfiOptions& opts = {});

/// Chooses the pure formula when every mode is pure to within purity_tol (or
/// when M is too singular), otherwise the mixed formula.
QfiResult qfi(const GaussianState& g, const QfiOptions& opts = {});

/// Cramer-Rao precision 1/sqrt(nu F) with nu = 1.
double precision_bound(double fisher);

/// Band average (1/(b - a)) * integral F dOmega by the trapezoidal rule.
/// Throws TooFewSamples for fewer than two points and ConfigError for a
/// non-increasing grid.
double average_qfi(std::span<const double> omegas, std::span<const double> fisher);

/// Convenience: QFI of a trajectory sample.
QfiResult state_qfi(const AugmentedState& s, const PhysicalParams& p,
                    DisplacementFrame frame = DisplacementFrame::output,
                    const QfiOptions& opts = {});

}  // namespace gyro
