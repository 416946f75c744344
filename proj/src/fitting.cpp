#include "monobox/fitting.hpp"

#include <cmath>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "monobox/errors.hpp"
#include "monobox/simd/kernels.hpp"

namespace monobox {

FitProblem make_problem(const TargetVector& targets) {
  for (int i = 0; i < kNumTargets; ++i) {
    if (!(targets.sigma[i] > 0.0) || !std::isfinite(targets.sigma[i])) {
      throw Error(ErrorCode::kInvalidArgument,
                  "sigma[" + std::to_string(i) + "] must be positive and finite");
    }
  }
  return FitProblem{targets};
}

TargetArray weighted_residuals(const FitProblem& problem, const Box3D& box,
                               TargetJacobian* jacobian) {
  const TargetArray w = problem.weights();
  const TargetArray f = residual_targets(box, problem.targets.context, jacobian);
  if (jacobian != nullptr) *jacobian = -(w.asDiagonal() * (*jacobian));
  return w.cwiseProduct(problem.targets.y - f);
}

double fit_cost(const FitProblem& problem, const Box3D& box) {
  const TargetArray f = residual_targets(box, problem.targets.context);
  const TargetArray w = problem.weights();
  return simd::active_kernels().weighted_sq_norm(problem.targets.y.data(), f.data(), w.data(),
                                                 kNumTargets);
}

BoxVector cost_gradient(const FitProblem& problem, const Box3D& box) {
  TargetJacobian j;
  const TargetArray r = weighted_residuals(problem, box, &j);
  return 2.0 * j.transpose() * r;
}

namespace {

// Relative size of cost changes treated as rounding noise.
constexpr double kCostRoundoff = 1e-12;

bool diagonal_intersection(const TargetVector& t, Vec2& out) {
  Eigen::Matrix2d a = Eigen::Matrix2d::Zero();
  Vec2 rhs = Vec2::Zero();
  int used = 0;
  for (int j = 0; j < 4; ++j) {
    const Vec2 p = decode_corner(t.y, t.context.pixel, j);
    const Vec2 q = decode_corner(t.y, t.context.pixel, 7 - j);
    const Vec2 dir = q - p;
    const double len = dir.norm();
    if (!(len > 1e-9)) continue;
    const Vec2 n(-dir.y() / len, dir.x() / len);
    const Eigen::Matrix2d nn = n * n.transpose();
    a += nn;
    rhs += nn * p;
    ++used;
  }
  if (used < 2) return false;
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(a);
  const Vec2 ev = es.eigenvalues();
  if (!(ev[0] > 1e-10 * ev[1])) return false;
  out = a.ldlt().solve(rhs);
  return out.allFinite();
}

}  // namespace

Box3D initialize(const TargetVector& targets, CenterEstimate center) {
  using namespace target_index;
  const TargetArray& y = targets.y;
  const double sa = y[kSinAlpha], ca = y[kCosAlpha];
  if (!(std::hypot(sa, ca) >= 1e-6)) {
    throw Error(ErrorCode::kDegenerateOrientation, "|(sin, cos)| below 1e-6");
  }
  const double d = y[kDistance];
  if (!(d > 0.0)) throw Error(ErrorCode::kNonpositiveDistance, "distance " + std::to_string(d));

  Vec2 u;
  if (center != CenterEstimate::kCornerDiagonals || !diagonal_intersection(targets, u)) {
    u = decode_box2d(y, targets.context.pixel).center();
  }

  const Camera& cam = targets.context.camera;
  const Vec3 ray = (cam.intrinsics_inverse() * Vec3(u.x(), u.y(), 1.0)).normalized();
  const Vec3 origin = cam.optical_center();
  // |origin + s ray| = d, s > 0.
  const double b = origin.dot(ray);
  const double disc = b * b - origin.squaredNorm() + d * d;
  const double s = -b + std::sqrt(std::max(disc, 0.0));
  const Vec3 c = origin + s * ray;

  Box3D box;
  box.x = c.x();
  box.y = c.y();
  box.z = c.z();
  box.h = std::exp(y[kLogDims + 0]);
  box.w = std::exp(y[kLogDims + 1]);
  box.l = std::exp(y[kLogDims + 2]);
  box.theta = normalize_angle(std::atan2(sa, ca) + std::atan2(c.x(), c.z()));
  return box;
}

FitResult solve(const FitProblem& problem, const Box3D& init, const SolverOptions& options,
                bool compute_covariance) {
  const TargetArray w = problem.weights();
  const TargetArray& y = problem.targets.y;
  const simd::KernelTable& kernels = simd::active_kernels();

  Box3D b = init;
  b.theta = normalize_angle(b.theta);
  TargetJacobian j;
  TargetArray r = weighted_residuals(problem, b, &j);
  double cost = r.squaredNorm();

  FitResult res;
  res.initial_cost = cost;
  double lambda = options.initial_damping;
  bool step_converged = false;
  bool stalled = false;

  for (int it = 0; it < options.max_iterations; ++it) {
    const BoxVector g = j.transpose() * r;
    const BoxMatrix a = j.transpose() * j;
    BoxVector scale = a.diagonal();
    const double floor = 1e-12 * std::max(1.0, scale.maxCoeff());
    scale = scale.cwiseMax(floor);

    bool accepted = false;
    while (!accepted) {
      BoxMatrix damped = a;
      damped.diagonal() += lambda * scale;
      Eigen::LDLT<BoxMatrix> ldlt(damped);
      BoxVector delta;
      bool ok = ldlt.info() == Eigen::Success;
      if (ok) {
        delta = -ldlt.solve(g);
        ok = delta.allFinite();
      }
      if (ok) {
        if (delta.norm() < options.step_tolerance) {
          step_converged = true;
          break;
        }
        Box3D trial = Box3D::from_params(b.params() + delta);
        trial.theta = normalize_angle(trial.theta);
        if (trial.has_positive_dims()) {
          try {
            const TargetArray f = residual_targets(trial, problem.targets.context);
            const double trial_cost = kernels.weighted_sq_norm(y.data(), f.data(), w.data(),
                                                               kNumTargets);
            if (trial_cost < cost) {
              b = trial;
              r = weighted_residuals(problem, b, &j);
              cost = r.squaredNorm();
              lambda = std::max(lambda / options.damping_decrease, 1e-300);
              ++res.iterations;
              accepted = true;
              continue;
            }
            // Near the optimum the decrease drops below the rounding noise of
            // E; there the gradient is the only usable progress measure.
            if (trial_cost - cost <= kCostRoundoff * cost) {
              TargetJacobian tj;
              const TargetArray tr = weighted_residuals(problem, trial, &tj);
              if ((tj.transpose() * tr).cwiseAbs().maxCoeff() <
                  0.5 * g.cwiseAbs().maxCoeff()) {
                b = trial;
                r = tr;
                j = tj;
                cost = r.squaredNorm();
                ++res.iterations;
                accepted = true;
                continue;
              }
            }
          } catch (const Error& e) {
            if (e.code() != ErrorCode::kDepthTooSmall) throw;
          }
        }
      }
      lambda *= options.damping_increase;
      if (lambda > options.max_damping) {
        stalled = true;
        break;
      }
    }
    if (step_converged || stalled) break;
  }

  res.box = b;
  res.final_cost = cost;
  res.gradient_norm = (2.0 * j.transpose() * r).cwiseAbs().maxCoeff();
  const bool gradient_small = res.gradient_norm < options.gradient_tolerance;
  res.converged = step_converged || gradient_small;
  if (res.converged) {
    res.status = FitStatus::kConverged;
  } else {
    res.status = stalled ? FitStatus::kStalled : FitStatus::kMaxIterations;
  }

  if (compute_covariance) {
    try {
      res.covariance = covariance_from_jacobian(j);
      res.has_covariance = true;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kRankDeficient) throw;
    }
  }
  return res;
}

BoxMatrix covariance_from_jacobian(const ResidualJacobian& jacobian) {
  if (jacobian.rows() < kBoxParams) {
    throw Error(ErrorCode::kRankDeficient, "fewer residuals than parameters");
  }
  const BoxMatrix a = jacobian.transpose() * jacobian;
  Eigen::SelfAdjointEigenSolver<BoxMatrix> es(a);
  const BoxVector ev = es.eigenvalues();
  if (!(ev[kBoxParams - 1] > 0.0) || !(ev[0] > 1e-13 * ev[kBoxParams - 1])) {
    throw Error(ErrorCode::kRankDeficient, "J^T J is numerically singular");
  }
  BoxMatrix cov = es.eigenvectors() * ev.cwiseInverse().asDiagonal() *
                  es.eigenvectors().transpose();
  return 0.5 * (cov + cov.transpose());
}

BoxMatrix covariance(const Box3D& at, const FitProblem& problem) {
  TargetJacobian j;
  weighted_residuals(problem, at, &j);
  return covariance_from_jacobian(j);
}

}  // namespace monobox
