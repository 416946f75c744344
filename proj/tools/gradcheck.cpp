#include "gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "monobox/diffopt.hpp"
#include "monobox/errors.hpp"
#include "monobox/synth.hpp"
#include "monobox/training.hpp"

namespace monobox::tools {
namespace {

// Worst column-wise relative error. Columns much smaller than the largest
// one are compared against floor_fraction times the largest column norm.
double column_relative_error(const Eigen::MatrixXd& analytic, const Eigen::MatrixXd& numeric,
                             double floor_fraction = 1e-6) {
  double max_norm = 0.0;
  for (Eigen::Index c = 0; c < numeric.cols(); ++c) max_norm = std::max(max_norm, numeric.col(c).norm());
  const double floor = std::max(floor_fraction * max_norm, 1e-12);
  double worst = 0.0;
  for (Eigen::Index c = 0; c < numeric.cols(); ++c) {
    const double err = (analytic.col(c) - numeric.col(c)).norm();
    worst = std::max(worst, err / std::max(numeric.col(c).norm(), floor));
  }
  return worst;
}

std::vector<SynthObject> sample_objects(std::uint64_t seed, int count, const NoiseConfig& noise) {
  SynthConfig cfg;
  cfg.seed = seed;
  cfg.noise = noise;
  std::vector<SynthObject> out;
  for (std::uint64_t i = 0; static_cast<int>(out.size()) < count; ++i) {
    for (const SynthObject& o : generate_scene(cfg, i).objects) {
      if (static_cast<int>(out.size()) < count) out.push_back(o);
    }
  }
  return out;
}

}  // namespace

CheckResult residual_jacobian(std::uint64_t seed, int n) {
  CheckResult res{"residual jacobian vs central differences", 0.0, 1e-4, 0};
  // Oversample; configurations where an envelope extreme switches corners
  // inside the difference step are not differentiable and are skipped.
  for (const SynthObject& o : sample_objects(seed, 2 * n, {})) {
    if (res.cases == n) break;
    const FitProblem problem = make_problem(o.clean);
    TargetJacobian j;
    const TargetArray r0 = weighted_residuals(problem, o.box, &j);
    Eigen::MatrixXd fd(kNumTargets, kBoxParams);
    const BoxVector p = o.box.params();
    bool kink = false;
    for (int k = 0; k < kBoxParams; ++k) {
      const double h = 1e-6 * std::max(1.0, std::abs(p[k]));
      BoxVector pp = p, pm = p;
      pp[k] += h;
      pm[k] -= h;
      const TargetArray rp = weighted_residuals(problem, Box3D::from_params(pp));
      const TargetArray rm = weighted_residuals(problem, Box3D::from_params(pm));
      fd.col(k) = (rp - rm) / (2.0 * h);
      const TargetArray one_sided = ((rp - r0) - (r0 - rm)) / h;
      kink = kink || one_sided.cwiseAbs().maxCoeff() > 1e-2 * std::max(1.0, fd.col(k).norm());
    }
    if (kink) continue;
    res.error = std::max(res.error, column_relative_error(j, fd));
    ++res.cases;
  }
  if (res.cases < n) res.error = std::numeric_limits<double>::infinity();
  return res;
}

void implicit_jacobians_check(std::uint64_t seed, int n, CheckResult& dy, CheckResult& dsigma) {
  NoiseConfig noise{1.0, 0.1, 0.02, 0.02, 1.0};
  EndToEndOptions tight;
  for (const SynthObject& o : sample_objects(seed + 1, n, noise)) {
    const FitProblem problem = make_problem(o.noisy);
    const FitResult fit = solve(problem, initialize(o.noisy), tight.solver);
    if (!fit.converged) continue;
    const ImplicitJacobians jac = implicit_jacobians(fit, problem);
    Eigen::MatrixXd fd_y(kBoxParams, kNumTargets), fd_s(kBoxParams, kNumTargets);
    const double delta = 1e-5;
    auto resolve = [&](const TargetVector& t) {
      BoxVector p = solve(make_problem(t), fit.box, tight.solver, false).box.params();
      p[box_index::kTheta] = fit.box.theta + normalize_angle(p[box_index::kTheta] - fit.box.theta);
      return p;
    };
    for (int i = 0; i < kNumTargets; ++i) {
      TargetVector tp = o.noisy, tm = o.noisy;
      tp.y[i] += delta;
      tm.y[i] -= delta;
      fd_y.col(i) = (resolve(tp) - resolve(tm)) / (2.0 * delta);
      tp = o.noisy;
      tm = o.noisy;
      const double hs = delta * o.noisy.sigma[i];
      tp.sigma[i] += hs;
      tm.sigma[i] -= hs;
      fd_s.col(i) = (resolve(tp) - resolve(tm)) / (2.0 * hs);
    }
    dy.error = std::max(dy.error, column_relative_error(jac.db_dy, fd_y, 1e-2));
    dsigma.error = std::max(dsigma.error, column_relative_error(jac.db_dsigma, fd_s, 1e-2));
    ++dy.cases;
    ++dsigma.cases;
  }
}

CheckResult iou_gradient(std::uint64_t seed, int n) {
  CheckResult res{"iou3d gradient, autodiff vs fine central differences", 0.0, 1e-5, 0};
  std::mt19937_64 rng(seed + 2);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  while (res.cases < n) {
    const Box3D a{1.5 + 0.5 * u(rng), 1.6 + 0.4 * u(rng), 3.9 + u(rng), u(rng), 1.0, 20.0 + u(rng),
                  3.14159 * u(rng)};
    const Box3D b{a.h * (1 + 0.2 * u(rng)), a.w * (1 + 0.2 * u(rng)), a.l * (1 + 0.2 * u(rng)),
                  a.x + 0.5 * u(rng), a.y + 0.3 * u(rng), a.z + 0.5 * u(rng),
                  a.theta + 0.5 * u(rng)};
    const IouGradient ad = iou3d_grad(a, b, IouGradientMethod::kAutodiff);
    if (ad.zero_intersection || iou3d_grad(a, b).nonsmooth) continue;
    const BoxVector p = a.params();
    BoxVector fd;
    for (int k = 0; k < kBoxParams; ++k) {
      const double h = 1e-6 * std::max(1.0, std::abs(p[k]));
      BoxVector pp = p, pm = p;
      pp[k] += h;
      pm[k] -= h;
      fd[k] = (iou_3d(Box3D::from_params(pp), b) - iou_3d(Box3D::from_params(pm), b)) / (2 * h);
    }
    res.error = std::max(res.error, (ad.gradient - fd).cwiseAbs().maxCoeff());
    ++res.cases;
  }
  return res;
}

CheckResult regressor_jacobian(std::uint64_t seed) {
  CheckResult res{"regressor jacobian vs central differences", 0.0, 1e-6, 0};
  for (int hidden : {0, 8}) {
    TargetArray scale = TargetArray::Constant(2.0);
    ToyRegressor reg(5, hidden, TargetArray::Zero(), scale, TargetArray::Zero(), seed, 1.0);
    std::mt19937_64 rng(seed + 3);
    std::normal_distribution<double> n01;
    Eigen::VectorXd x(5);
    for (int i = 0; i < 5; ++i) x[i] = n01(rng);
    const Eigen::MatrixXd jac = reg.jacobian(x);
    Eigen::MatrixXd fd(kRegressorOutputs, reg.num_params());
    for (Eigen::Index k = 0; k < reg.num_params(); ++k) {
      const double p0 = reg.params()[k];
      const double h = 1e-6;
      reg.params()[k] = p0 + h;
      const auto up = reg.forward(x);
      reg.params()[k] = p0 - h;
      const auto dn = reg.forward(x);
      reg.params()[k] = p0;
      fd.col(k) << (up.y - dn.y) / (2 * h), (up.log_sigma - dn.log_sigma) / (2 * h);
    }
    res.error = std::max(res.error, (jac - fd).cwiseAbs().maxCoeff());
    ++res.cases;
  }
  return res;
}

CheckResult end_to_end(std::uint64_t seed) {
  CheckResult res{"end-to-end dL_IoU/dW vs pipeline finite differences", 0.0, 1e-3, 0};
  // The gradient only exists where every fit is a smooth stationary point;
  // configurations with a kink optimum or a nonsmooth IoU are skipped.
  EndToEndOptions opts;
  opts.iou_gradient = IouGradientMethod::kAutodiff;
  for (std::uint64_t attempt = 0; attempt < 20 && res.cases == 0; ++attempt) {
    TrainToyConfig cfg;
    cfg.data.synth.seed = seed * 100 + attempt;
    const ToyDataset data = make_toy_dataset(cfg.data);
    ToyRegressor reg = make_toy_regressor(data, 0, seed);
    Adam adam(reg.num_params(), cfg.method2_learning_rate);
    for (int s = 0; s < cfg.method2_steps; ++s) {
      adam.step(reg.params(), method2_loss(reg, data).gradient);
    }
    const EndToEndResult g = end_to_end_grad(reg, data, opts);
    if (g.failures > 0 || g.nonsmooth > 0) continue;
    Eigen::VectorXd fd(reg.num_params());
    for (Eigen::Index k = 0; k < reg.num_params(); ++k) {
      const double p0 = reg.params()[k];
      const double h = 1e-6;
      reg.params()[k] = p0 + h;
      const double up = method3_loss(reg, data, opts);
      reg.params()[k] = p0 - h;
      const double dn = method3_loss(reg, data, opts);
      reg.params()[k] = p0;
      fd[k] = (up - dn) / (2 * h);
    }
    res.error = (g.gradient - fd).norm() / std::max(fd.norm(), 1e-12);
    res.cases = 1;
  }
  return res;
}

std::vector<CheckResult> run_gradchecks(std::uint64_t seed, int configurations) {
  std::vector<CheckResult> out;
  out.push_back(residual_jacobian(seed, configurations));
  CheckResult dy{"implicit db/dy vs re-solve differences", 0.0, 1e-3, 0};
  CheckResult ds{"implicit db/dsigma vs re-solve differences", 0.0, 1e-3, 0};
  implicit_jacobians_check(seed, std::max(1, configurations / 10), dy, ds);
  out.push_back(dy);
  out.push_back(ds);
  out.push_back(iou_gradient(seed, configurations));
  out.push_back(regressor_jacobian(seed));
  out.push_back(end_to_end(seed));
  for (CheckResult& r : out) {
    if (r.cases == 0) r.error = std::numeric_limits<double>::infinity();
  }
  return out;
}

}  // namespace monobox::tools
