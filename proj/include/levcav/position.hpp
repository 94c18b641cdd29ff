#pragma once

#include <Eigen/Dense>
#include <vector>

namespace levcav {

struct CalibPoint {
  double pixel = 0.0;        // ζ
  double omega0 = 0.0;       // rad/s
  double sigma_omega = 0.0;  // rad/s; 0 for unweighted
};

/// Ω0(ζ) = Ω_c / √(1 + ((ζ − ζ_c) ξ / x_R)²).
struct CameraScale {
  double zeta_c = 0.0;   // pixels
  double scale = 0.0;    // ξ, m/pixel (> 0 by convention)
  double omega_c = 0.0;  // rad/s
  double rayleigh_length = 0.0;  // m, fixed input
  Eigen::Matrix3d covariance = Eigen::Matrix3d::Zero();  // (ζ_c, ξ, Ω_c)
  double residual_norm = 0.0;
  double condition_number = 0.0;
  std::vector<double> residuals;  // ω_model − ω_observed at each input point, rad/s
};

double camera_model(const CameraScale& s, double pixel);

/// Throws DomainError for < 4 points or a single pixel position, NumericalError for an
/// ill-conditioned geometry.
CameraScale fit_camera_scale(const std::vector<CalibPoint>& points, double rayleigh_length);

struct ParticlePosition {
  double x0 = 0.0;        // m from cavity center
  double x0_prime = 0.0;  // m from the mirror, x0 + L/2
  double sigma = 0.0;     // m, from the scale covariance
};

/// Throws DomainError when |x0| > L/2.
ParticlePosition position_from_pixel(const CameraScale& s, double pixel, double cavity_length);

/// Pixel on the +ξ side at which the model yields omega0 (inverse of camera_model).
double pixel_from_frequency(const CameraScale& s, double omega0, bool positive_side = true);

}  // namespace levcav
