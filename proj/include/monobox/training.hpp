#pragma once
// Toy-scale training through the box fit: a ToyRegressor maps per-object
// features to targets and sigmas, the targets are fitted to boxes, and the
// 3D IoU loss is differentiated back to the regressor weights through the
// implicit Jacobians of the fit.

#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "monobox/diffopt.hpp"
#include "monobox/regressor.hpp"
#include "monobox/synth.hpp"

namespace monobox {

struct ToyObject {
  Eigen::VectorXd features;
  TargetContext context;
  Box3D box;         // ground truth
  TargetArray y;     // clean targets of `box` at `context`
};

struct ToyScene {
  std::vector<ToyObject> objects;
  std::vector<Box3D> ground_truth;
};

struct ToyDataset {
  std::vector<ToyScene> scenes;
  int feature_dim = 0;
  TargetArray y_mean = TargetArray::Zero();
  TargetArray y_scale = TargetArray::Ones();

  std::size_t num_objects() const;
};

struct ToyDatasetConfig {
  SynthConfig synth;
  std::size_t scenes = 5;
  /// Features are a fixed random linear mix of the standardized box
  /// parameters, anchor pixel and projective ratios (1/z, x/z, y/z), plus
  /// N(0, feature_noise^2). The targets stay non-linear in these, so an
  /// affine regressor cannot fit them exactly.
  int feature_dim = 13;
  double feature_noise = 0.05;
};

ToyDataset make_toy_dataset(const ToyDatasetConfig& config);

/// Regressor whose output offsets and scales standardize the dataset targets;
/// log sigma starts at log(y_scale * sigma_fraction).
ToyRegressor make_toy_regressor(const ToyDataset& data, int hidden_width, std::uint64_t seed,
                                double init_scale = 0.1, double sigma_fraction = 0.1);

struct LossAndGradient {
  double loss = 0.0;
  Eigen::VectorXd gradient;
};

/// Heteroscedastic regression loss against the clean targets, averaged over
/// objects and targets. Residuals and sigmas are measured in units of the
/// dataset's per-target scale, so the unit prior is meaningful for every group.
LossAndGradient method2_loss(const ToyRegressor& regressor, const ToyDataset& data);

struct EndToEndOptions {
  SolverOptions solver;
  ImplicitMode implicit_mode = ImplicitMode::kExactHessian;
  IouGradientMethod iou_gradient = IouGradientMethod::kCentralDifference;
  double lambda = 1.0;  // weight of the IoU term; no classification term at toy scale

  EndToEndOptions();
};

struct EndToEndResult {
  double loss = 0.0;  // lambda * L_IoU
  Eigen::VectorXd gradient;
  int detections = 0;
  int failures = 0;            // initialize/solve failed or did not converge
  int zero_intersections = 0;  // fitted box overlaps no ground truth
  int nonsmooth = 0;
};

/// lambda * (1 - mean over all objects of the best IoU of the fitted box
/// with the ground truth of its own scene). Failed fits count as IoU 0.
double method3_loss(const ToyRegressor& regressor, const ToyDataset& data,
                    const EndToEndOptions& options = {});

/// method3_loss and its gradient with respect to the regressor parameters,
/// assembled as dL/db * (db/dy dy/dW + db/dsigma dsigma/dW). Failed fits and
/// zero-overlap detections contribute no gradient.
EndToEndResult end_to_end_grad(const ToyRegressor& regressor, const ToyDataset& data,
                               const EndToEndOptions& options = {});

struct TrainToyConfig {
  ToyDatasetConfig data;
  int hidden_width = 0;
  std::uint64_t seed = 1;
  int method2_steps = 300;
  double method2_learning_rate = 1e-2;
  int method3_steps = 100;
  double method3_learning_rate = 2e-3;
  EndToEndOptions end_to_end;
};

struct TrainToyResult {
  std::vector<double> method2_loss;  // before each step, then final
  std::vector<double> iou_loss;      // before each Method 3 step, then final
  ToyRegressor regressor;
};

/// Method 2 pretraining followed by Method 3 fine-tuning, both with Adam.
TrainToyResult train_toy(const TrainToyConfig& config);

}  // namespace monobox
