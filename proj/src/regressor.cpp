#include "monobox/regressor.hpp"

#include <cmath>
#include <random>

#include "monobox/errors.hpp"

namespace monobox {

ToyRegressor::ToyRegressor(int feature_dim, int hidden_width, const TargetArray& y_offset,
                           const TargetArray& y_scale, const TargetArray& log_sigma_offset,
                           std::uint64_t seed, double init_scale)
    : feature_dim_(feature_dim),
      hidden_(hidden_width),
      y_offset_(y_offset),
      y_scale_(y_scale),
      log_sigma_offset_(log_sigma_offset) {
  if (feature_dim <= 0 || hidden_width < 0) {
    throw Error(ErrorCode::kInvalidArgument, "regressor dimensions must be positive");
  }
  const Eigen::Index k = hidden_ > 0 ? hidden_ : feature_dim_;
  params_ = Eigen::VectorXd::Zero(first_layer_size() + kRegressorOutputs * (k + 1));
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::Index pos = 0;
  if (hidden_ > 0) {
    const double s = 1.0 / std::sqrt(static_cast<double>(feature_dim_));
    for (Eigen::Index i = 0; i < hidden_ * feature_dim_; ++i) params_[pos++] = s * normal(rng);
    pos += hidden_;  // bias starts at 0
  }
  const double s = init_scale / std::sqrt(static_cast<double>(k));
  for (Eigen::Index i = 0; i < kRegressorOutputs * k; ++i) params_[pos++] = s * normal(rng);
}

Eigen::Index ToyRegressor::first_layer_size() const {
  return hidden_ > 0 ? static_cast<Eigen::Index>(hidden_) * (feature_dim_ + 1) : 0;
}

Eigen::VectorXd ToyRegressor::hidden_activations(const Eigen::VectorXd& x) const {
  if (hidden_ == 0) return x;
  const Eigen::Map<const Eigen::MatrixXd> w1(params_.data(), hidden_, feature_dim_);
  const Eigen::Map<const Eigen::VectorXd> b1(params_.data() + hidden_ * feature_dim_, hidden_);
  return (w1 * x + b1).array().tanh().matrix();
}

ToyRegressor::Output ToyRegressor::forward(const Eigen::VectorXd& features) const {
  if (features.size() != feature_dim_) {
    throw Error(ErrorCode::kInvalidArgument, "feature dimension mismatch");
  }
  const Eigen::VectorXd a = hidden_activations(features);
  const Eigen::Index k = a.size();
  const Eigen::Index off = first_layer_size();
  const Eigen::Map<const Eigen::MatrixXd> w2(params_.data() + off, kRegressorOutputs, k);
  const Eigen::Map<const Eigen::VectorXd> b2(params_.data() + off + kRegressorOutputs * k,
                                             kRegressorOutputs);
  const Eigen::VectorXd z = w2 * a + b2;
  Output out;
  out.y = y_offset_ + y_scale_.cwiseProduct(z.head<kNumTargets>());
  out.log_sigma = log_sigma_offset_ + z.tail<kNumTargets>();
  return out;
}

Eigen::MatrixXd ToyRegressor::jacobian(const Eigen::VectorXd& features) const {
  Eigen::MatrixXd jac(kRegressorOutputs, num_params());
  for (int o = 0; o < kRegressorOutputs; ++o) {
    TargetArray dy = TargetArray::Zero(), ds = TargetArray::Zero();
    if (o < kNumTargets) {
      dy[o] = 1.0;
    } else {
      ds[o - kNumTargets] = 1.0;
    }
    jac.row(o) = backward(features, dy, ds).transpose();
  }
  return jac;
}

Eigen::VectorXd ToyRegressor::backward(const Eigen::VectorXd& features, const TargetArray& d_y,
                                       const TargetArray& d_log_sigma) const {
  const Eigen::VectorXd a = hidden_activations(features);
  const Eigen::Index k = a.size();
  const Eigen::Index off = first_layer_size();
  Eigen::VectorXd dz(kRegressorOutputs);
  dz.head<kNumTargets>() = d_y.cwiseProduct(y_scale_);
  dz.tail<kNumTargets>() = d_log_sigma;

  Eigen::VectorXd grad = Eigen::VectorXd::Zero(num_params());
  // Column-major W2: d/dW2(o, c) = dz[o] * a[c].
  Eigen::Map<Eigen::MatrixXd>(grad.data() + off, kRegressorOutputs, k) = dz * a.transpose();
  grad.segment(off + kRegressorOutputs * k, kRegressorOutputs) = dz;
  if (hidden_ > 0) {
    const Eigen::Map<const Eigen::MatrixXd> w2(params_.data() + off, kRegressorOutputs, k);
    const Eigen::VectorXd da = w2.transpose() * dz;
    const Eigen::VectorXd dpre = da.cwiseProduct((1.0 - a.array().square()).matrix());
    Eigen::Map<Eigen::MatrixXd>(grad.data(), hidden_, feature_dim_) = dpre * features.transpose();
    grad.segment(hidden_ * feature_dim_, hidden_) = dpre;
  }
  return grad;
}

Adam::Adam(Eigen::Index size, double lr, double beta1, double beta2, double epsilon)
    : learning_rate(lr),
      beta1_(beta1),
      beta2_(beta2),
      epsilon_(epsilon),
      m_(Eigen::VectorXd::Zero(size)),
      v_(Eigen::VectorXd::Zero(size)) {}

void Adam::step(Eigen::VectorXd& params, const Eigen::VectorXd& gradient) {
  ++t_;
  m_ = beta1_ * m_ + (1.0 - beta1_) * gradient;
  v_ = beta2_ * v_ + (1.0 - beta2_) * gradient.cwiseAbs2();
  const double c1 = 1.0 - std::pow(beta1_, t_);
  const double c2 = 1.0 - std::pow(beta2_, t_);
  params.array() -= learning_rate * (m_.array() / c1) / ((v_.array() / c2).sqrt() + epsilon_);
}

}  // namespace monobox
