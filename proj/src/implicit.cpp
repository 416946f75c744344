#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>

#include "monobox/diffopt.hpp"
#include "monobox/errors.hpp"

namespace monobox {
namespace {

Eigen::MatrixXd symmetric_inverse(const Eigen::MatrixXd& h) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h);
  const Eigen::VectorXd ev = es.eigenvalues();
  const double largest = ev.cwiseAbs().maxCoeff();
  if (!(largest > 0.0) || !(ev.cwiseAbs().minCoeff() > 1e-13 * largest)) {
    throw Error(ErrorCode::kRankDeficient, "Hessian of the fit cost is singular");
  }
  return es.eigenvectors() * ev.cwiseInverse().asDiagonal() * es.eigenvectors().transpose();
}

}  // namespace

GenericImplicitJacobians implicit_jacobians_generic(const Eigen::MatrixXd& f_jacobian,
                                                    const Eigen::VectorXd& residual,
                                                    const Eigen::VectorXd& sigma,
                                                    const std::vector<Eigen::MatrixXd>& f_hessians,
                                                    ImplicitMode mode) {
  const Eigen::Index m = f_jacobian.rows();
  const Eigen::Index n = f_jacobian.cols();
  if (residual.size() != m || sigma.size() != m) {
    throw Error(ErrorCode::kInvalidArgument, "implicit_jacobians: size mismatch");
  }
  const Eigen::VectorXd inv_var = sigma.array().square().inverse();

  // Half the Hessian of E; the factor 2 cancels against the cross terms.
  Eigen::MatrixXd half_h = f_jacobian.transpose() * inv_var.asDiagonal() * f_jacobian;
  if (mode == ImplicitMode::kExactHessian) {
    if (static_cast<Eigen::Index>(f_hessians.size()) != m) {
      throw Error(ErrorCode::kInvalidArgument, "exact mode needs one Hessian per residual");
    }
    for (Eigen::Index i = 0; i < m; ++i) half_h -= inv_var[i] * residual[i] * f_hessians[i];
  }
  const Eigen::MatrixXd inv = symmetric_inverse(0.5 * (half_h + half_h.transpose()));

  GenericImplicitJacobians out;
  // d grad/d y_i = -2 sigma_i^-2 grad f_i for both modes.
  out.db_dy = inv * f_jacobian.transpose() * inv_var.asDiagonal();
  // d grad/d sigma_i = 4 sigma_i^-3 e_i grad f_i (exact); Gauss-Newton keeps
  // only the dr/dsigma half of it.
  const double factor = mode == ImplicitMode::kExactHessian ? 2.0 : 1.0;
  const Eigen::VectorXd cross =
      factor * residual.cwiseProduct(sigma.array().cube().inverse().matrix());
  out.db_dsigma = -inv * f_jacobian.transpose() * cross.asDiagonal();
  (void)n;
  return out;
}

std::vector<Eigen::MatrixXd> target_hessians(const Box3D& box, const TargetContext& ctx) {
  const BoxVector p = box.params();
  std::vector<Eigen::MatrixXd> out(kNumTargets, Eigen::MatrixXd::Zero(kBoxParams, kBoxParams));
  for (int k = 0; k < kBoxParams; ++k) {
    const double h = 1e-5 * std::max(1.0, std::abs(p[k]));
    BoxVector pp = p, pm = p;
    pp[k] += h;
    pm[k] -= h;
    TargetJacobian jp, jm;
    residual_targets(Box3D::from_params(pp), ctx, &jp);
    residual_targets(Box3D::from_params(pm), ctx, &jm);
    const TargetJacobian d = (jp - jm) / (2.0 * h);
    for (int i = 0; i < kNumTargets; ++i) out[i].col(k) = d.row(i).transpose();
  }
  for (auto& h : out) h = 0.5 * (h + h.transpose()).eval();
  return out;
}

ImplicitJacobians implicit_jacobians(const FitResult& fit, const FitProblem& problem,
                                     ImplicitMode mode) {
  if (!fit.converged) throw Error(ErrorCode::kNotConverged, "fit did not converge");
  TargetJacobian jf;
  const TargetArray f = residual_targets(fit.box, problem.targets.context, &jf);
  const TargetArray e = problem.targets.y - f;
  // The implicit function theorem needs grad E = 0; optima sitting on an
  // envelope kink stop the solver with a nonzero one-sided gradient.
  const TargetArray w = problem.weights();
  const double grad = (2.0 * jf.transpose() * w.cwiseAbs2().cwiseProduct(e)).cwiseAbs().maxCoeff();
  const double tol = kStationarityTolerance * std::max(1.0, w.cwiseAbs2().maxCoeff());
  if (!(grad < tol)) {
    throw Error(ErrorCode::kNotConverged, "|grad E| = " + std::to_string(grad) + " at the fit");
  }
  std::vector<Eigen::MatrixXd> hessians;
  if (mode == ImplicitMode::kExactHessian) hessians = target_hessians(fit.box, problem.targets.context);
  const GenericImplicitJacobians g =
      implicit_jacobians_generic(jf, e, problem.targets.sigma, hessians, mode);
  ImplicitJacobians out;
  out.db_dy = g.db_dy;
  out.db_dsigma = g.db_dsigma;
  return out;
}

}  // namespace monobox
