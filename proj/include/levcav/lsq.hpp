#pragma once

#include <Eigen/Dense>
#include <functional>
#include <string>

namespace levcav {

using ResidualFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;
using JacobianFn = std::function<Eigen::MatrixXd(const Eigen::VectorXd&)>;

struct LsqOptions {
  int max_iterations = 200;
  double step_tolerance = 1e-10;  // relative
  double cost_tolerance = 1e-15;  // relative decrease treated as stagnation
  double initial_lambda = 1e-3;
  double fd_relative_step = 1e-6; // central differences when no Jacobian is given
  Eigen::VectorXd typical_scale;  // optional per-parameter scale for the FD step
};

struct LsqResult {
  Eigen::VectorXd params;
  Eigen::MatrixXd covariance;   // s² (JᵀJ)⁻¹, s² = RSS/(n − p)
  Eigen::MatrixXd jacobian;     // at the optimum
  double residual_norm = 0.0;   // sqrt(RSS)
  double condition_number = 0.0;  // of the column-scaled Jacobian
  int iterations = 0;
  bool converged = false;
  std::string message;
};

/// Damped Gauss-Newton (Levenberg-Marquardt with Marquardt diagonal scaling).
/// Never throws on non-convergence; check `converged`.
LsqResult levenberg_marquardt(const ResidualFn& residuals, Eigen::VectorXd start,
                              const LsqOptions& options = {}, const JacobianFn& jacobian = {});

/// Central-difference Jacobian of `residuals` at x.
Eigen::MatrixXd numeric_jacobian(const ResidualFn& residuals, const Eigen::VectorXd& x,
                                 double relative_step, const Eigen::VectorXd& typical_scale = {});

}  // namespace levcav
