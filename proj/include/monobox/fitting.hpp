#pragma once
// Weighted non-linear least-squares box fitting.
//
//   E(b; y) = sum_i (w_i (y_i - f_i(b)))^2,   w_i = 1 / sigma_i
//
// minimized over the 7 box parameters by Levenberg-Marquardt, with the
// Gaussian maximum-likelihood covariance (J^T J)^{-1} of the weighted
// residual Jacobian J = dr/db at the optimum.

#include <Eigen/Core>

#include "monobox/geometry.hpp"
#include "monobox/targets.hpp"

namespace monobox {

using ResidualJacobian = Eigen::Matrix<double, Eigen::Dynamic, kBoxParams>;

/// A single detection's fitting problem. Weights are always 1 / sigma.
struct FitProblem {
  TargetVector targets;

  TargetArray weights() const { return targets.sigma.cwiseInverse(); }
};

/// Throws Error(kInvalidArgument) if any sigma is not strictly positive.
FitProblem make_problem(const TargetVector& targets);

/// Weighted residuals r = w (y - f(b)) and optionally J = dr/db.
TargetArray weighted_residuals(const FitProblem& problem, const Box3D& box,
                               TargetJacobian* jacobian = nullptr);

/// E(b) = |r|^2.
double fit_cost(const FitProblem& problem, const Box3D& box);

/// grad E = 2 J^T r.
BoxVector cost_gradient(const FitProblem& problem, const Box3D& box);

/// How initialize() locates the image of the 3D box center.
enum class CenterEstimate {
  /// Least-squares intersection of the four projected body diagonals
  /// (corner targets j and 7 - j); exact for noiseless targets.
  kCornerDiagonals,
  /// Midpoint of the regressed 2D box.
  kBox2DCenter,
};

/// Closed-form initial box from the targets: center along the back-projected
/// ray at the regressed distance, dimensions from the log targets, yaw from
/// the observation angle. Throws kDegenerateOrientation / kNonpositiveDistance.
Box3D initialize(const TargetVector& targets,
                 CenterEstimate center = CenterEstimate::kCornerDiagonals);

struct SolverOptions {
  double initial_damping = 1e-3;
  double damping_increase = 10.0;
  double damping_decrease = 10.0;
  double max_damping = 1e16;
  int max_iterations = 50;
  double gradient_tolerance = 1e-8;  // on |grad E|_inf
  double step_tolerance = 1e-10;     // on |delta|_2
};

enum class FitStatus {
  kConverged,
  kMaxIterations,
  kStalled,  // damping exhausted without a decrease
};

struct FitResult {
  Box3D box;
  BoxMatrix covariance = BoxMatrix::Zero();
  bool has_covariance = false;
  double initial_cost = 0.0;
  double final_cost = 0.0;
  double gradient_norm = 0.0;  // |grad E|_inf at box
  int iterations = 0;          // accepted steps
  bool converged = false;
  FitStatus status = FitStatus::kMaxIterations;
};

/// Levenberg-Marquardt with Marquardt diagonal damping. On kMaxIterations
/// or kStalled the best iterate is returned with converged = false.
/// Throws kDepthTooSmall if `init` is not projectable.
FitResult solve(const FitProblem& problem, const Box3D& init, const SolverOptions& options = {},
                bool compute_covariance = true);

/// (J^T J)^{-1} of the weighted residual Jacobian. Throws kRankDeficient.
BoxMatrix covariance(const Box3D& at, const FitProblem& problem);
BoxMatrix covariance_from_jacobian(const ResidualJacobian& jacobian);

}  // namespace monobox
