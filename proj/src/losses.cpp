#include <algorithm>
#include <cmath>

#include "monobox/diffopt.hpp"
#include "monobox/errors.hpp"

namespace monobox {

int best_match(const Box3D& detection, std::span<const Box3D> ground_truth, double* iou) {
  int best = -1;
  double best_iou = -1.0;
  for (std::size_t g = 0; g < ground_truth.size(); ++g) {
    const double v = iou_3d(detection, ground_truth[g]);
    if (v > best_iou) {
      best_iou = v;
      best = static_cast<int>(g);
    }
  }
  if (iou != nullptr) *iou = std::max(best_iou, 0.0);
  return best;
}

double iou_loss(std::span<const Box3D> detections, std::span<const Box3D> ground_truth) {
  if (detections.empty()) throw Error(ErrorCode::kEmptyDetections, "iou_loss needs detections");
  double sum = 0.0;
  for (const Box3D& d : detections) {
    double v = 0.0;
    best_match(d, ground_truth, &v);
    sum += v;
  }
  return 1.0 - sum / static_cast<double>(detections.size());
}

IouGradient iou3d_grad(const Box3D& a, const Box3D& b, IouGradientMethod method) {
  IouGradient out;
  const double v0 = iou_3d(a, b);
  if (!(v0 > 0.0)) {
    out.zero_intersection = true;
    return out;
  }
  if (method == IouGradientMethod::kAutodiff) {
    out.gradient = iou_3d_gradient_autodiff(a, b);
    return out;
  }
  const BoxVector p = a.params();
  for (int k = 0; k < kBoxParams; ++k) {
    const double h = kIouGradientStep * std::max(1.0, std::abs(p[k]));
    BoxVector pp = p, pm = p;
    pp[k] += h;
    pm[k] -= h;
    const double vp = iou_3d(Box3D::from_params(pp), b);
    const bool backward_ok = k > box_index::kL || pm[k] > 0.0;
    if (!backward_ok) {
      out.gradient[k] = (vp - v0) / h;
      continue;
    }
    const double vm = iou_3d(Box3D::from_params(pm), b);
    out.gradient[k] = (vp - vm) / (2.0 * h);
    const double forward = (vp - v0) / h;
    const double backward = (v0 - vm) / h;
    if (std::abs(forward - backward) > 10.0 * kNonsmoothTolerance) out.nonsmooth = true;
  }
  return out;
}

double loss_homoscedastic(std::span<const TargetArray> residuals, const TargetArray& sigma) {
  if (residuals.empty()) return 0.0;
  const TargetArray inv_2var = (2.0 * sigma.array().square()).inverse();
  const double log_term = sigma.array().log().sum();
  double acc = 0.0;
  for (const TargetArray& r : residuals) {
    acc += (r.array().square() * inv_2var.array()).sum() + log_term;
  }
  return acc / static_cast<double>(residuals.size());
}

TargetArray loss_homoscedastic_grad_sigma(std::span<const TargetArray> residuals,
                                          const TargetArray& sigma) {
  TargetArray mean_sq = TargetArray::Zero();
  if (residuals.empty()) return mean_sq;
  for (const TargetArray& r : residuals) mean_sq += r.cwiseAbs2();
  mean_sq /= static_cast<double>(residuals.size());
  return (-mean_sq.array() / sigma.array().cube() + sigma.array().inverse()).matrix();
}

double loss_heteroscedastic(double residual, double sigma) {
  const double inv_var = 1.0 / (sigma * sigma);
  return 0.5 * residual * residual * inv_var + std::log(sigma) + 0.5 * inv_var;
}

HeteroscedasticGrad loss_heteroscedastic_grad(double residual, double sigma) {
  const double inv_var = 1.0 / (sigma * sigma);
  return {residual * inv_var, 1.0 - (residual * residual + 1.0) * inv_var};
}

}  // namespace monobox
