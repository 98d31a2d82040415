#include "gyroqfi/nn.hpp"

#include <cmath>
#include <stdexcept>

namespace gyro::nn {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

Mlp::Mlp(std::vector<int> sizes) : sizes_(std::move(sizes)) {
  if (sizes_.size() < 2) throw std::invalid_argument("Mlp needs at least input and output sizes");
  Eigen::Index off = 0;
  for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
    if (sizes_[l] <= 0 || sizes_[l + 1] <= 0) throw std::invalid_argument("Mlp layer sizes must be > 0");
    offsets_.push_back(off);
    off += static_cast<Eigen::Index>(sizes_[l]) * sizes_[l + 1] + sizes_[l + 1];
  }
  params_ = Eigen::VectorXd::Zero(off);
}

void Mlp::initialize(std::mt19937_64& rng, double hidden_gain, double output_gain) {
  for (int l = 0; l < layer_count(); ++l) {
    const double gain = l + 1 == layer_count() ? output_gain : hidden_gain;
    const double s = gain / std::sqrt(static_cast<double>(sizes_[l]));
    std::uniform_real_distribution<double> u(-s, s);
    const Eigen::Index nw = static_cast<Eigen::Index>(sizes_[l]) * sizes_[l + 1];
    for (Eigen::Index i = 0; i < nw; ++i) params_[offsets_[l] + i] = u(rng);
    params_.segment(offsets_[l] + nw, sizes_[l + 1]).setZero();
  }
}

Eigen::Map<const RowMat> Mlp::weight(int layer) const {
  return {params_.data() + offsets_[layer], sizes_[layer + 1], sizes_[layer]};
}

Eigen::Map<const Eigen::VectorXd> Mlp::bias(int layer) const {
  const Eigen::Index nw = static_cast<Eigen::Index>(sizes_[layer]) * sizes_[layer + 1];
  return {params_.data() + offsets_[layer] + nw, sizes_[layer + 1]};
}

Eigen::MatrixXd Mlp::forward(const Eigen::MatrixXd& x, Cache* cache) const {
  Eigen::MatrixXd h = x;
  if (cache) {
    cache->act.clear();
    cache->act.push_back(h);
  }
  for (int l = 0; l < layer_count(); ++l) {
    Eigen::MatrixXd z = weight(l) * h;
    z.colwise() += bias(l);
    h = l + 1 == layer_count() ? z : Eigen::MatrixXd(z.array().tanh());
    if (cache) cache->act.push_back(h);
  }
  return h;
}

Eigen::VectorXd Mlp::forward(const Eigen::VectorXd& x) const {
  return forward(Eigen::MatrixXd(x)).col(0);
}

void Mlp::backward(const Cache& cache, const Eigen::MatrixXd& d_out, Eigen::VectorXd& grad) const {
  Eigen::MatrixXd delta = d_out;
  for (int l = layer_count() - 1; l >= 0; --l) {
    if (l + 1 < layer_count()) delta.array() *= 1.0 - cache.act[l + 1].array().square();
    const Eigen::MatrixXd& in = cache.act[l];
    const Eigen::Index nw = static_cast<Eigen::Index>(sizes_[l]) * sizes_[l + 1];
    Eigen::Map<RowMat> gw(grad.data() + offsets_[l], sizes_[l + 1], sizes_[l]);
    gw += delta * in.transpose();
    grad.segment(offsets_[l] + nw, sizes_[l + 1]) += delta.rowwise().sum();
    if (l > 0) delta = weight(l).transpose() * delta;
  }
}

Adam::Adam(Eigen::Index n, AdamOptions opts)
    : opts_(opts), m_(Eigen::VectorXd::Zero(n)), v_(Eigen::VectorXd::Zero(n)) {}

void Adam::step(Eigen::VectorXd& params, const Eigen::VectorXd& grad) {
  ++t_;
  m_ = opts_.beta1 * m_ + (1.0 - opts_.beta1) * grad;
  v_ = opts_.beta2 * v_ + (1.0 - opts_.beta2) * grad.cwiseAbs2();
  const double c1 = 1.0 - std::pow(opts_.beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(opts_.beta2, static_cast<double>(t_));
  params.array() -=
      opts_.learning_rate * (m_.array() / c1) / ((v_.array() / c2).sqrt() + opts_.eps);
}

double clip_grad_norm(Eigen::VectorXd& grad, double max_norm) {
  const double n = grad.norm();
  if (max_norm > 0.0 && n > max_norm) grad *= max_norm / n;
  return n;
}

}  // namespace gyro::nn
