#pragma once
// Differentiation through the box fit and the training losses.

#include <span>
#include <vector>

#include <Eigen/Core>

#include "monobox/fitting.hpp"

namespace monobox {

using TargetToBox = Eigen::Matrix<double, kBoxParams, kNumTargets>;

struct ImplicitJacobians {
  TargetToBox db_dy = TargetToBox::Zero();
  TargetToBox db_dsigma = TargetToBox::Zero();
};

enum class ImplicitMode {
  /// Implicit function theorem on grad_b E = 0 with the full Hessian of E,
  /// including residual-weighted second derivatives of f and the dependence
  /// of dr/db on sigma. Matches finite differences through the solver.
  kExactHessian,
  /// -[dr/db]^+ [dr/dy], -[dr/db]^+ [dr/dsigma] via the Gauss-Newton normal
  /// equations. Exact for db_dy at zero residual only.
  kGaussNewton,
};

/// Generic form on an m-residual, n-parameter problem with
/// r_i = (y_i - f_i(b)) / sigma_i.
///   f_jacobian   m x n, df/db at the optimum
///   residual     m, y - f(b) (unweighted)
///   sigma        m
///   f_hessians   m matrices n x n (second derivatives of f_i); ignored in
///                Gauss-Newton mode and may be empty there
/// Returns (db_dy, db_dsigma), each n x m. Throws kRankDeficient.
struct GenericImplicitJacobians {
  Eigen::MatrixXd db_dy;
  Eigen::MatrixXd db_dsigma;
};
GenericImplicitJacobians implicit_jacobians_generic(const Eigen::MatrixXd& f_jacobian,
                                                    const Eigen::VectorXd& residual,
                                                    const Eigen::VectorXd& sigma,
                                                    const std::vector<Eigen::MatrixXd>& f_hessians,
                                                    ImplicitMode mode);

/// |grad E|_inf required at a fit before its implicit Jacobians are formed,
/// scaled by max(1, max_i w_i^2) so that it follows a common rescaling of sigma.
inline constexpr double kStationarityTolerance = 1e-8;

/// Jacobians of the fitted box with respect to the targets and their sigmas.
/// Throws kNotConverged if !fit.converged or the fit is not stationary,
/// kRankDeficient if the Hessian is singular.
ImplicitJacobians implicit_jacobians(const FitResult& fit, const FitProblem& problem,
                                     ImplicitMode mode = ImplicitMode::kExactHessian);

/// Second derivatives of f_i(b), by central differences of the analytic
/// target Jacobian.
std::vector<Eigen::MatrixXd> target_hessians(const Box3D& box, const TargetContext& ctx);

/// 1 - mean over detections of the best IoU with any ground truth box.
/// Throws kEmptyDetections.
double iou_loss(std::span<const Box3D> detections, std::span<const Box3D> ground_truth);

/// Index of the ground-truth box with the highest IoU (first on ties), -1 if
/// `ground_truth` is empty.
int best_match(const Box3D& detection, std::span<const Box3D> ground_truth, double* iou = nullptr);

enum class IouGradientMethod { kCentralDifference, kAutodiff };

struct IouGradient {
  BoxVector gradient = BoxVector::Zero();
  bool zero_intersection = false;
  bool nonsmooth = false;
};

inline constexpr double kIouGradientStep = 1e-4;
inline constexpr double kNonsmoothTolerance = 1e-3;

/// d IoU(a, b) / d a. Zero with zero_intersection set when IoU(a, b) == 0.
/// Central differences use step kIouGradientStep * max(1, |a_k|); a
/// parameter whose forward and backward quotients disagree by more than
/// 10 * kNonsmoothTolerance sets `nonsmooth`.
IouGradient iou3d_grad(const Box3D& a, const Box3D& b,
                       IouGradientMethod method = IouGradientMethod::kCentralDifference);

/// Homoscedastic Gaussian regression loss: mean over samples of
/// sum_k r_k^2 / (2 sigma_k^2) + log sigma_k.
double loss_homoscedastic(std::span<const TargetArray> residuals, const TargetArray& sigma);

/// d loss_homoscedastic / d sigma_k.
TargetArray loss_homoscedastic_grad_sigma(std::span<const TargetArray> residuals,
                                          const TargetArray& sigma);

/// Heteroscedastic per-element loss with an exponential prior (Gamma with
/// shape 1, rate 1/2) on the precision: r^2/(2 sigma^2) + log sigma + 1/(2 sigma^2).
double loss_heteroscedastic(double residual, double sigma);

/// Partial derivatives of loss_heteroscedastic with respect to the residual
/// and to log sigma.
struct HeteroscedasticGrad {
  double d_residual;
  double d_log_sigma;
};
HeteroscedasticGrad loss_heteroscedastic_grad(double residual, double sigma);

}  // namespace monobox
