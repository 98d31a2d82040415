#pragma once

#include <Eigen/Dense>
#include <random>
#include <vector>

namespace gyro::nn {

/// Fully connected network with tanh hidden layers and a linear output.
///
/// Parameters live in one flat vector, layer by layer, each layer as its
/// weight matrix (row-major, out x in) followed by its bias.
class Mlp {
 public:
  Mlp() = default;
  Mlp(std::vector<int> sizes);

  /// W ~ U(-s, s) with s = gain / sqrt(fan_in); biases zero.
  void initialize(std::mt19937_64& rng, double hidden_gain = 1.0, double output_gain = 0.01);

  int input_size() const { return sizes_.front(); }
  int output_size() const { return sizes_.back(); }
  const std::vector<int>& sizes() const { return sizes_; }
  Eigen::Index parameter_count() const { return params_.size(); }

  Eigen::VectorXd& params() { return params_; }
  const Eigen::VectorXd& params() const { return params_; }

  /// Activations of every layer for a batch (columns are samples).
  struct Cache {
    std::vector<Eigen::MatrixXd> act;
  };

  Eigen::MatrixXd forward(const Eigen::MatrixXd& x, Cache* cache = nullptr) const;
  Eigen::VectorXd forward(const Eigen::VectorXd& x) const;

  /// Accumulates dLoss/dparams into `grad` given dLoss/doutput for the batch
  /// cached by the matching forward call.
  void backward(const Cache& cache, const Eigen::MatrixXd& d_out, Eigen::VectorXd& grad) const;

  Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> weight(
      int layer) const;
  Eigen::Map<const Eigen::VectorXd> bias(int layer) const;
  int layer_count() const { return static_cast<int>(sizes_.size()) - 1; }

 private:
  std::vector<int> sizes_;
  std::vector<Eigen::Index> offsets_;
  Eigen::VectorXd params_;
};

struct AdamOptions {
  double learning_rate = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

class Adam {
 public:
  Adam() = default;
  Adam(Eigen::Index n, AdamOptions opts);

  void step(Eigen::VectorXd& params, const Eigen::VectorXd& grad);
  long steps() const { return t_; }

 private:
  AdamOptions opts_;
  Eigen::VectorXd m_, v_;
  long t_ = 0;
};

/// Scales `grad` so its Euclidean norm is at most `max_norm`; returns the
/// norm before clipping.
double clip_grad_norm(Eigen::VectorXd& grad, double max_norm);

}  // namespace gyro::nn
