#include "monobox/training.hpp"

#include <cmath>
#include <random>

#include "monobox/errors.hpp"

namespace monobox {
namespace {

constexpr int kRawFeatures = 13;

Eigen::Matrix<double, kRawFeatures, 1> raw_features(const Box3D& b, const Vec2& pixel) {
  Eigen::Matrix<double, kRawFeatures, 1> v;
  v << b.h, b.w, b.l, b.x, b.y, b.z, std::sin(b.theta), std::cos(b.theta), pixel.x(), pixel.y(),
      1.0 / b.z, b.x / b.z, b.y / b.z;
  return v;
}

struct FittedObject {
  bool ok = false;
  FitProblem problem;
  FitResult fit;
  double iou = 0.0;
  int match = -1;
};

FittedObject fit_object(const ToyRegressor& regressor, const ToyObject& obj,
                        const std::vector<Box3D>& ground_truth, const EndToEndOptions& options) {
  FittedObject out;
  const ToyRegressor::Output pred = regressor.forward(obj.features);
  TargetVector t;
  t.y = pred.y;
  t.sigma = pred.sigma();
  t.context = obj.context;
  try {
    out.problem = make_problem(t);
    out.fit = solve(out.problem, initialize(t), options.solver, false);
  } catch (const Error&) {
    return out;
  }
  if (!out.fit.converged) return out;
  out.ok = true;
  out.match = best_match(out.fit.box, ground_truth, &out.iou);
  return out;
}

}  // namespace

std::size_t ToyDataset::num_objects() const {
  std::size_t n = 0;
  for (const ToyScene& s : scenes) n += s.objects.size();
  return n;
}

EndToEndOptions::EndToEndOptions() {
  // Finite differences through the pipeline need the argmin resolved well
  // below the perturbation size.
  solver.step_tolerance = 1e-13;
  solver.gradient_tolerance = 1e-10;
  solver.max_iterations = 100;
}

ToyDataset make_toy_dataset(const ToyDatasetConfig& config) {
  if (config.scenes == 0 || config.feature_dim <= 0 || config.feature_noise < 0.0) {
    throw Error(ErrorCode::kInvalidArgument, "invalid toy dataset configuration");
  }
  const std::vector<Scene> scenes = generate_scenes(config.synth, config.scenes);

  ToyDataset data;
  data.feature_dim = config.feature_dim;
  std::vector<Eigen::Matrix<double, kRawFeatures, 1>> raw;
  std::vector<TargetArray> ys;
  for (const Scene& s : scenes) {
    ToyScene ts;
    for (const SynthObject& o : s.objects) {
      ToyObject obj;
      obj.context = o.clean.context;
      obj.box = o.box;
      obj.y = o.clean.y;
      ts.objects.push_back(obj);
      ts.ground_truth.push_back(o.box);
      raw.push_back(raw_features(o.box, o.anchor));
      ys.push_back(o.clean.y);
    }
    data.scenes.push_back(std::move(ts));
  }
  const std::size_t n = raw.size();
  if (n == 0) throw Error(ErrorCode::kInvalidArgument, "toy dataset has no objects");

  Eigen::Matrix<double, kRawFeatures, 1> f_mean = Eigen::Matrix<double, kRawFeatures, 1>::Zero();
  Eigen::Matrix<double, kRawFeatures, 1> f_var = f_mean;
  for (std::size_t i = 0; i < n; ++i) {
    f_mean += raw[i];
    data.y_mean += ys[i];
  }
  f_mean /= static_cast<double>(n);
  data.y_mean /= static_cast<double>(n);
  TargetArray y_var = TargetArray::Zero();
  for (std::size_t i = 0; i < n; ++i) {
    f_var += (raw[i] - f_mean).cwiseAbs2();
    y_var += (ys[i] - data.y_mean).cwiseAbs2();
  }
  const auto stdev = [n](double v) { return std::max(std::sqrt(v / static_cast<double>(n)), 1e-2); };
  const Eigen::Matrix<double, kRawFeatures, 1> f_std = f_var.unaryExpr(stdev);
  data.y_scale = y_var.unaryExpr(stdev);

  std::mt19937_64 rng(config.synth.seed ^ 0x9e3779b97f4a7c15ULL);
  std::normal_distribution<double> n01(0.0, 1.0);
  Eigen::MatrixXd mix(config.feature_dim, kRawFeatures);
  for (Eigen::Index i = 0; i < mix.size(); ++i) mix.data()[i] = n01(rng) / std::sqrt(kRawFeatures);

  std::size_t k = 0;
  for (ToyScene& s : data.scenes) {
    for (ToyObject& o : s.objects) {
      const Eigen::VectorXd z = (raw[k++] - f_mean).cwiseQuotient(f_std);
      o.features = mix * z;
      for (Eigen::Index i = 0; i < o.features.size(); ++i) {
        o.features[i] += config.feature_noise * n01(rng);
      }
    }
  }
  return data;
}

ToyRegressor make_toy_regressor(const ToyDataset& data, int hidden_width, std::uint64_t seed,
                                double init_scale, double sigma_fraction) {
  const TargetArray log_sigma = (data.y_scale * sigma_fraction).array().log().matrix();
  return ToyRegressor(data.feature_dim, hidden_width, data.y_mean, data.y_scale, log_sigma, seed,
                      init_scale);
}

LossAndGradient method2_loss(const ToyRegressor& regressor, const ToyDataset& data) {
  LossAndGradient out;
  out.gradient = Eigen::VectorXd::Zero(regressor.num_params());
  const double norm = 1.0 / (static_cast<double>(data.num_objects()) * kNumTargets);
  for (const ToyScene& s : data.scenes) {
    for (const ToyObject& o : s.objects) {
      const ToyRegressor::Output pred = regressor.forward(o.features);
      const TargetArray sigma = pred.sigma();
      TargetArray d_y, d_log_sigma;
      for (int i = 0; i < kNumTargets; ++i) {
        const double scale = data.y_scale[i];
        const double r = (pred.y[i] - o.y[i]) / scale;
        const double s = sigma[i] / scale;
        out.loss += norm * loss_heteroscedastic(r, s);
        const HeteroscedasticGrad g = loss_heteroscedastic_grad(r, s);
        d_y[i] = norm * g.d_residual / scale;
        d_log_sigma[i] = norm * g.d_log_sigma;
      }
      out.gradient += regressor.backward(o.features, d_y, d_log_sigma);
    }
  }
  return out;
}

double method3_loss(const ToyRegressor& regressor, const ToyDataset& data,
                    const EndToEndOptions& options) {
  const std::size_t n = data.num_objects();
  if (n == 0) throw Error(ErrorCode::kEmptyDetections, "no objects");
  double sum = 0.0;
  for (const ToyScene& s : data.scenes) {
    for (const ToyObject& o : s.objects) {
      const FittedObject f = fit_object(regressor, o, s.ground_truth, options);
      if (f.ok) sum += f.iou;
    }
  }
  return options.lambda * (1.0 - sum / static_cast<double>(n));
}

EndToEndResult end_to_end_grad(const ToyRegressor& regressor, const ToyDataset& data,
                               const EndToEndOptions& options) {
  const std::size_t n = data.num_objects();
  if (n == 0) throw Error(ErrorCode::kEmptyDetections, "no objects");
  EndToEndResult out;
  out.gradient = Eigen::VectorXd::Zero(regressor.num_params());
  double sum = 0.0;
  const double scale = -options.lambda / static_cast<double>(n);
  for (const ToyScene& s : data.scenes) {
    for (const ToyObject& o : s.objects) {
      ++out.detections;
      const FittedObject f = fit_object(regressor, o, s.ground_truth, options);
      if (!f.ok) {
        ++out.failures;
        continue;
      }
      sum += f.iou;
      if (f.match < 0) {
        ++out.zero_intersections;
        continue;
      }
      const IouGradient g = iou3d_grad(f.fit.box, s.ground_truth[f.match], options.iou_gradient);
      if (g.zero_intersection) {
        ++out.zero_intersections;
        continue;
      }
      if (g.nonsmooth) ++out.nonsmooth;
      ImplicitJacobians jac;
      try {
        jac = implicit_jacobians(f.fit, f.problem, options.implicit_mode);
      } catch (const Error&) {
        ++out.failures;
        continue;
      }
      const BoxVector dl_db = scale * g.gradient;
      const TargetArray d_y = jac.db_dy.transpose() * dl_db;
      // sigma = exp(log sigma)
      const TargetArray d_log_sigma =
          (jac.db_dsigma.transpose() * dl_db).cwiseProduct(f.problem.targets.sigma);
      out.gradient += regressor.backward(o.features, d_y, d_log_sigma);
    }
  }
  out.loss = options.lambda * (1.0 - sum / static_cast<double>(n));
  return out;
}

TrainToyResult train_toy(const TrainToyConfig& config) {
  const ToyDataset data = make_toy_dataset(config.data);
  TrainToyResult out{{}, {}, make_toy_regressor(data, config.hidden_width, config.seed)};
  ToyRegressor& reg = out.regressor;

  Adam adam2(reg.num_params(), config.method2_learning_rate);
  for (int step = 0; step < config.method2_steps; ++step) {
    const LossAndGradient lg = method2_loss(reg, data);
    out.method2_loss.push_back(lg.loss);
    adam2.step(reg.params(), lg.gradient);
  }
  out.method2_loss.push_back(method2_loss(reg, data).loss);

  Adam adam3(reg.num_params(), config.method3_learning_rate);
  for (int step = 0; step < config.method3_steps; ++step) {
    const EndToEndResult r = end_to_end_grad(reg, data, config.end_to_end);
    out.iou_loss.push_back(r.loss);
    adam3.step(reg.params(), r.gradient);
  }
  out.iou_loss.push_back(method3_loss(reg, data, config.end_to_end));
  return out;
}

}  // namespace monobox
