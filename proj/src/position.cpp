#include "levcav/position.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "levcav/errors.hpp"
#include "levcav/lsq.hpp"

namespace levcav {

double camera_model(const CameraScale& s, double pixel) {
  const double u = (pixel - s.zeta_c) * s.scale / s.rayleigh_length;
  return s.omega_c / std::sqrt(1.0 + u * u);
}

CameraScale fit_camera_scale(const std::vector<CalibPoint>& pts, double xr) {
  if (pts.size() < 4) throw DomainError("camera fit needs at least 4 points");
  if (!(xr > 0.0)) throw DomainError("Rayleigh length must be positive");
  const auto [pmin, pmax] = std::minmax_element(
      pts.begin(), pts.end(), [](auto& a, auto& b) { return a.pixel < b.pixel; });
  if (pmin->pixel == pmax->pixel) throw DomainError("all calibration points share one pixel");
  for (const auto& p : pts)
    if (!(p.omega0 > 0.0)) throw DomainError("calibration frequencies must be positive");

  // Start: ζ_c at the frequency maximum, Ω_c slightly above it, ξ from the widest point.
  const auto top = std::max_element(pts.begin(), pts.end(),
                                    [](auto& a, auto& b) { return a.omega0 < b.omega0; });
  const auto low = std::min_element(pts.begin(), pts.end(),
                                    [](auto& a, auto& b) { return a.omega0 < b.omega0; });
  const double wc0 = top->omega0 * 1.001;
  const double span = std::max(std::abs(low->pixel - top->pixel), 1e-12 * std::abs(pmax->pixel));
  const double ratio = std::max(wc0 * wc0 / (low->omega0 * low->omega0) - 1.0, 1e-6);
  const double xi0 = xr * std::sqrt(ratio) / span;
  const double pscale = pmax->pixel - pmin->pixel;

  const auto n = static_cast<Eigen::Index>(pts.size());
  // Parameters: (ζ_c / pixel span, ξ / ξ0, Ω_c / Ω_c0).
  auto unpack = [&](const Eigen::VectorXd& p) {
    CameraScale s;
    s.zeta_c = p[0] * pscale;
    s.scale = p[1] * xi0;
    s.omega_c = p[2] * wc0;
    s.rayleigh_length = xr;
    return s;
  };
  ResidualFn residuals = [&](const Eigen::VectorXd& p) {
    const CameraScale s = unpack(p);
    Eigen::VectorXd r(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const CalibPoint& c = pts[static_cast<std::size_t>(i)];
      const double w = c.sigma_omega > 0.0 ? c.sigma_omega : wc0;
      r[i] = (camera_model(s, c.pixel) - c.omega0) / w;
    }
    return r;
  };
  Eigen::VectorXd start(3);
  start << top->pixel / pscale, 1.0, 1.0;
  LsqOptions opt;
  opt.max_iterations = 500;
  const LsqResult r = levenberg_marquardt(residuals, start, opt);
  if (!r.converged) throw NumericalError("camera fit did not converge: " + r.message);
  if (!std::isfinite(r.condition_number) || r.condition_number > 1e8) {
    std::ostringstream os;
    os << "camera fit ill-conditioned (condition " << r.condition_number
       << "); need points on both sides of the center or |x| comparable to x_R";
    throw NumericalError(os.str());
  }

  CameraScale s = unpack(r.params);
  Eigen::Vector3d d(pscale, xi0, wc0);
  if (s.scale < 0.0) {
    s.scale = -s.scale;
    d[1] = -d[1];
  }
  s.covariance = d.asDiagonal() * r.covariance * d.asDiagonal();
  const bool weighted = std::all_of(pts.begin(), pts.end(), [](auto& p) { return p.sigma_omega > 0.0; });
  s.residual_norm = weighted ? r.residual_norm : r.residual_norm * wc0;
  s.condition_number = r.condition_number;
  for (const auto& p : pts) s.residuals.push_back(camera_model(s, p.pixel) - p.omega0);
  return s;
}

ParticlePosition position_from_pixel(const CameraScale& s, double pixel, double length) {
  ParticlePosition p;
  p.x0 = (pixel - s.zeta_c) * s.scale;
  if (std::abs(p.x0) > length / 2.0) {
    std::ostringstream os;
    os << "pixel " << pixel << " maps to x0 = " << p.x0 << " m, outside the cavity";
    throw DomainError(os.str());
  }
  p.x0_prime = p.x0 + length / 2.0;
  // x0 = (ζ − ζ_c) ξ: gradient (−ξ, ζ − ζ_c) in (ζ_c, ξ).
  Eigen::Vector2d grad(-s.scale, pixel - s.zeta_c);
  p.sigma = std::sqrt(std::max(0.0, grad.dot(s.covariance.topLeftCorner<2, 2>() * grad)));
  return p;
}

double pixel_from_frequency(const CameraScale& s, double omega0, bool positive_side) {
  if (!(omega0 > 0.0) || omega0 > s.omega_c)
    throw DomainError("frequency outside the model range (0, omega_c]");
  const double u = std::sqrt(s.omega_c * s.omega_c / (omega0 * omega0) - 1.0);
  const double dz = u * s.rayleigh_length / s.scale;
  return s.zeta_c + (positive_side ? dz : -dz);
}

}  // namespace levcav
