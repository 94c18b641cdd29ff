#include "levcav/lsq.hpp"

#include <cmath>
#include <limits>

namespace levcav {

Eigen::MatrixXd numeric_jacobian(const ResidualFn& residuals, const Eigen::VectorXd& x,
                                 double relative_step, const Eigen::VectorXd& typical_scale) {
  const Eigen::Index p = x.size();
  Eigen::MatrixXd jac;
  for (Eigen::Index j = 0; j < p; ++j) {
    double scale = std::abs(x[j]);
    if (typical_scale.size() == p) scale = std::max(scale, std::abs(typical_scale[j]));
    if (scale == 0.0) scale = 1.0;
    const double h = relative_step * scale;
    Eigen::VectorXd xp = x, xm = x;
    xp[j] += h;
    xm[j] -= h;
    const Eigen::VectorXd rp = residuals(xp);
    const Eigen::VectorXd rm = residuals(xm);
    if (j == 0) jac.resize(rp.size(), p);
    jac.col(j) = (rp - rm) / (2.0 * h);
  }
  return jac;
}

namespace {

double scaled_condition(const Eigen::MatrixXd& jac) {
  Eigen::MatrixXd scaled = jac;
  for (Eigen::Index j = 0; j < jac.cols(); ++j) {
    const double n = jac.col(j).norm();
    if (n > 0.0) scaled.col(j) /= n;
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(scaled);
  const auto& sv = svd.singularValues();
  if (sv.size() == 0) return std::numeric_limits<double>::infinity();
  const double smin = sv[sv.size() - 1];
  if (smin <= 0.0) return std::numeric_limits<double>::infinity();
  // A zero column can not be rescaled; count it as singular.
  for (Eigen::Index j = 0; j < jac.cols(); ++j)
    if (jac.col(j).norm() == 0.0) return std::numeric_limits<double>::infinity();
  return sv[0] / smin;
}

}  // namespace

LsqResult levenberg_marquardt(const ResidualFn& residuals, Eigen::VectorXd x,
                              const LsqOptions& opt, const JacobianFn& jacobian) {
  auto jac_at = [&](const Eigen::VectorXd& v) {
    return jacobian ? jacobian(v) : numeric_jacobian(residuals, v, opt.fd_relative_step, opt.typical_scale);
  };

  LsqResult out;
  Eigen::VectorXd r = residuals(x);
  double cost = r.squaredNorm();
  if (!std::isfinite(cost)) {
    out.params = x;
    out.message = "residuals not finite at the starting point";
    out.residual_norm = std::numeric_limits<double>::infinity();
    return out;
  }
  Eigen::MatrixXd jac = jac_at(x);
  double lambda = opt.initial_lambda;

  int it = 0;
  for (; it < opt.max_iterations; ++it) {
    const Eigen::MatrixXd jtj = jac.transpose() * jac;
    const Eigen::VectorXd jtr = jac.transpose() * r;
    Eigen::VectorXd diag = jtj.diagonal();
    for (Eigen::Index j = 0; j < diag.size(); ++j)
      if (diag[j] <= 0.0) diag[j] = 1e-30;

    bool accepted = false;
    Eigen::VectorXd step;
    for (int tries = 0; tries < 40; ++tries) {
      Eigen::MatrixXd a = jtj;
      a.diagonal() += lambda * diag;
      step = a.ldlt().solve(-jtr);
      const Eigen::VectorXd trial = x + step;
      const Eigen::VectorXd r_trial = residuals(trial);
      const double c_trial = r_trial.squaredNorm();
      if (std::isfinite(c_trial) && c_trial <= cost) {
        const double decrease = cost - c_trial;
        x = trial;
        r = r_trial;
        const double old_cost = cost;
        cost = c_trial;
        lambda = std::max(lambda / 10.0, 1e-15);
        accepted = true;
        const bool small_step =
            step.norm() <= opt.step_tolerance * (x.norm() + opt.step_tolerance);
        const bool stagnant = decrease <= opt.cost_tolerance * old_cost;
        if (small_step || stagnant || cost == 0.0) {
          out.converged = true;
          out.message = small_step ? "relative step below tolerance"
                                   : (cost == 0.0 ? "exact fit" : "cost stagnated");
        }
        break;
      }
      lambda *= 10.0;
      if (lambda > 1e16) break;
    }
    if (!accepted) {
      // No descent direction left: the start of this iteration was already stationary.
      out.converged = jtr.norm() <= 1e-8 * (jac.norm() * r.norm() + 1e-300);
      out.message = out.converged ? "stationary point" : "damping exhausted without descent";
      break;
    }
    jac = jac_at(x);
    if (out.converged) break;
  }
  if (it == opt.max_iterations && !out.converged) out.message = "iteration limit reached";

  out.params = x;
  out.iterations = it + 1;
  out.jacobian = jac;
  out.residual_norm = std::sqrt(cost);
  out.condition_number = scaled_condition(jac);
  const Eigen::Index n = r.size(), p = x.size();
  const double dof = n > p ? static_cast<double>(n - p) : 1.0;
  const Eigen::MatrixXd jtj = jac.transpose() * jac;
  Eigen::FullPivLU<Eigen::MatrixXd> lu(jtj);
  if (lu.isInvertible())
    out.covariance = lu.inverse() * (cost / dof);
  else
    out.covariance = Eigen::MatrixXd::Constant(p, p, std::numeric_limits<double>::infinity());
  return out;
}

}  // namespace levcav
