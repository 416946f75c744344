#pragma once
// A deliberately small differentiable map from per-object feature vectors to
// targets and log standard deviations, with hand-written Jacobians. Stands in
// for the network when checking gradients through the box fit.

#include <cstdint>
#include <span>

#include <Eigen/Core>

#include "monobox/targets.hpp"

namespace monobox {

inline constexpr int kRegressorOutputs = 2 * kNumTargets;

class ToyRegressor {
 public:
  struct Output {
    TargetArray y;
    TargetArray log_sigma;
    TargetArray sigma() const { return log_sigma.array().exp().matrix(); }
  };

  /// hidden_width == 0 gives a purely affine map. Outputs are
  ///   y = y_offset + y_scale * z[0..25],  log sigma = log_sigma_offset + z[26..51]
  /// where z is the raw network output. Weights start as N(0, init_scale^2 / fan_in).
  ToyRegressor(int feature_dim, int hidden_width, const TargetArray& y_offset,
               const TargetArray& y_scale, const TargetArray& log_sigma_offset,
               std::uint64_t seed, double init_scale = 0.1);

  int feature_dim() const { return feature_dim_; }
  int hidden_width() const { return hidden_; }
  Eigen::Index num_params() const { return params_.size(); }

  const Eigen::VectorXd& params() const { return params_; }
  Eigen::VectorXd& params() { return params_; }

  Output forward(const Eigen::VectorXd& features) const;

  /// d(y, log sigma) / d params, kRegressorOutputs x num_params.
  Eigen::MatrixXd jacobian(const Eigen::VectorXd& features) const;

  /// Vector-Jacobian product: (d_y, d_log_sigma)^T * jacobian(features).
  Eigen::VectorXd backward(const Eigen::VectorXd& features, const TargetArray& d_y,
                           const TargetArray& d_log_sigma) const;

 private:
  Eigen::Index first_layer_size() const;
  Eigen::VectorXd hidden_activations(const Eigen::VectorXd& features) const;

  int feature_dim_;
  int hidden_;
  TargetArray y_offset_, y_scale_, log_sigma_offset_;
  Eigen::VectorXd params_;
};

/// Adam with the usual bias correction.
class Adam {
 public:
  explicit Adam(Eigen::Index size, double learning_rate = 1e-2, double beta1 = 0.9,
                double beta2 = 0.999, double epsilon = 1e-8);
  void step(Eigen::VectorXd& params, const Eigen::VectorXd& gradient);
  double learning_rate = 1e-2;

 private:
  double beta1_, beta2_, epsilon_;
  Eigen::VectorXd m_, v_;
  int t_ = 0;
};

}  // namespace monobox
