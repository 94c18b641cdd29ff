#pragma once

#include <Eigen/Dense>
#include <span>
#include <string>

namespace levcav {

/// Damped-oscillator power lineshape A γ / ((ω² − Ω²)² + ω² γ²).
/// With A = a·T·γ this integrates over ω ∈ [0, ∞) to a·T·π/(2Ω²).
double oscillator_lineshape(double omega, double amplitude, double resonance, double linewidth);

struct LineshapeGuess {
  double amplitude = 0.0;
  double resonance = 0.0;  // rad/s
  double linewidth = 0.0;  // rad/s
};

enum class FitWeighting { uniform, relative };

struct LineshapeFit {
  double amplitude = 0.0;
  double resonance = 0.0;
  double linewidth = 0.0;
  Eigen::Matrix3d covariance = Eigen::Matrix3d::Zero();  // (A, Ω, γ)
  double residual_norm = 0.0;
  int iterations = 0;
  bool converged = false;
  std::string message;
};

/// Peak bin, FWHM and peak height heuristics.
LineshapeGuess guess_lineshape(std::span<const double> omega, std::span<const double> values);

/// Least-squares fit of the lineshape to (omega, values). Never throws on
/// non-convergence; the returned fit carries the flag and message.
LineshapeFit fit_lineshape(std::span<const double> omega, std::span<const double> values,
                           const LineshapeGuess& guess,
                           FitWeighting weighting = FitWeighting::uniform);

}  // namespace levcav
