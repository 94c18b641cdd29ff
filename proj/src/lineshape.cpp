#include "levcav/lineshape.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "levcav/errors.hpp"
#include "levcav/lsq.hpp"

namespace levcav {

double oscillator_lineshape(double w, double amplitude, double resonance, double linewidth) {
  const double d = w * w - resonance * resonance;
  return amplitude * linewidth / (d * d + w * w * linewidth * linewidth);
}

LineshapeGuess guess_lineshape(std::span<const double> omega, std::span<const double> values) {
  if (omega.size() != values.size() || omega.size() < 3)
    throw DomainError("lineshape guess needs matching grids with at least 3 points");
  const auto peak_it = std::max_element(values.begin(), values.end());
  const std::size_t ip = static_cast<std::size_t>(peak_it - values.begin());
  const double peak = *peak_it;
  const double half = peak / 2.0;

  auto crossing = [&](std::size_t i, std::size_t j) {
    // linear interpolation between bins i (above half) and j (below half)
    const double t = (values[i] - half) / (values[i] - values[j]);
    return omega[i] + t * (omega[j] - omega[i]);
  };
  double left = omega.front(), right = omega.back();
  bool have_left = false, have_right = false;
  for (std::size_t i = ip; i > 0; --i)
    if (values[i - 1] < half) {
      left = crossing(i, i - 1);
      have_left = true;
      break;
    }
  for (std::size_t i = ip; i + 1 < values.size(); ++i)
    if (values[i + 1] < half) {
      right = crossing(i, i + 1);
      have_right = true;
      break;
    }

  LineshapeGuess g;
  g.resonance = omega[ip];
  if (have_left && have_right)
    g.linewidth = right - left;
  else if (have_left || have_right)
    g.linewidth = 2.0 * (have_left ? g.resonance - left : right - g.resonance);
  else
    g.linewidth = g.resonance / 10.0;
  if (!(g.linewidth > 0.0)) g.linewidth = g.resonance / 10.0;
  g.amplitude = peak * g.resonance * g.resonance * g.linewidth;
  return g;
}

LineshapeFit fit_lineshape(std::span<const double> omega, std::span<const double> values,
                           const LineshapeGuess& guess, FitWeighting weighting) {
  if (omega.size() != values.size() || omega.size() < 4)
    throw DomainError("lineshape fit needs matching grids with at least 4 points");
  const Eigen::Index n = static_cast<Eigen::Index>(omega.size());

  const double peak = *std::max_element(values.begin(), values.end());
  Eigen::VectorXd weight(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (weighting == FitWeighting::uniform) {
      weight[i] = 1.0 / peak;
    } else {
      const double floor = 1e-6 * peak;
      weight[i] = 1.0 / std::max(std::abs(values[static_cast<std::size_t>(i)]), floor);
    }
  }

  // Parameters are normalized by the guess so the solver sees O(1) numbers.
  const double sa = guess.amplitude, sw = guess.resonance, sg = guess.linewidth;
  auto residuals = [&](const Eigen::VectorXd& p) {
    Eigen::VectorXd r(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double w = omega[static_cast<std::size_t>(i)];
      r[i] = (oscillator_lineshape(w, p[0] * sa, p[1] * sw, std::abs(p[2]) * sg) -
              values[static_cast<std::size_t>(i)]) *
             weight[i];
    }
    return r;
  };
  auto jacobian = [&](const Eigen::VectorXd& p) {
    Eigen::MatrixXd j(n, 3);
    const double a = p[0] * sa, w0 = p[1] * sw;
    const double sign = p[2] < 0.0 ? -1.0 : 1.0;
    const double g = std::abs(p[2]) * sg;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double w = omega[static_cast<std::size_t>(i)];
      const double d = w * w - w0 * w0;
      const double den = d * d + w * w * g * g;
      const double f = a * g / den;
      j(i, 0) = f / a * sa;
      j(i, 1) = f * (4.0 * d * w0) / den * sw;
      j(i, 2) = (a / den - f * 2.0 * w * w * g / den) * sg * sign;
      j.row(i) *= weight[i];
    }
    return j;
  };

  LsqOptions opt;
  opt.max_iterations = 300;
  opt.step_tolerance = 1e-12;
  opt.cost_tolerance = 1e-16;
  const LsqResult res = levenberg_marquardt(residuals, Eigen::Vector3d(1.0, 1.0, 1.0), opt, jacobian);

  LineshapeFit fit;
  fit.amplitude = res.params[0] * sa;
  fit.resonance = std::abs(res.params[1] * sw);
  fit.linewidth = std::abs(res.params[2]) * sg;
  const Eigen::Vector3d scale(sa, sw, sg);
  fit.covariance = scale.asDiagonal() * res.covariance * scale.asDiagonal();
  fit.residual_norm = res.residual_norm;
  fit.iterations = res.iterations;
  fit.converged = res.converged && fit.amplitude > 0.0 && fit.resonance > 0.0 && fit.linewidth > 0.0;
  fit.message = res.message;
  return fit;
}

}  // namespace levcav
