#include <doctest.h>

#include "approx.hpp"

#include <cmath>
#include <random>

#include "levcav/constants.hpp"
#include "levcav/errors.hpp"
#include "levcav/params.hpp"
#include "levcav/position.hpp"
#include "fixture.hpp"

using namespace levcav;

namespace {

const double xr = derive_cavity(fixture::cavity()).rayleigh_length;

CameraScale truth() {
  CameraScale s;
  s.zeta_c = 512.0;
  s.scale = 6.5e-6;
  s.omega_c = angular(190e3);
  s.rayleigh_length = xr;
  return s;
}

std::vector<CalibPoint> samples(const CameraScale& s, double rel_noise, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  std::vector<CalibPoint> pts;
  for (double px = 0; px <= 1100; px += 50) {
    const double w = camera_model(s, px);
    pts.push_back({px, w * (1.0 + rel_noise * n(rng)), rel_noise * w});
  }
  return pts;
}

}  // namespace

TEST_CASE("camera model closed form") {
  const CameraScale s = truth();
  CHECK(camera_model(s, s.zeta_c) == s.omega_c);
  const double px = s.zeta_c + xr / s.scale;
  CHECK(camera_model(s, px) == approx(s.omega_c / std::sqrt(2.0)).epsilon(1e-14));
  CHECK(camera_model(s, s.zeta_c + 37.0) == camera_model(s, s.zeta_c - 37.0));
}

TEST_CASE("noiseless calibration is recovered exactly") {
  const CameraScale s = truth();
  std::vector<CalibPoint> pts = samples(s, 0.0, 1);
  for (auto& p : pts) p.sigma_omega = 0.0;
  const CameraScale f = fit_camera_scale(pts, xr);
  CHECK(f.zeta_c == approx(s.zeta_c).epsilon(1e-8));
  CHECK(f.scale == approx(s.scale).epsilon(1e-8));
  CHECK(f.omega_c == approx(s.omega_c).epsilon(1e-8));
  CHECK(f.residuals.size() == pts.size());
  for (double r : f.residuals) CHECK(std::abs(r) < 1e-6 * s.omega_c);
}

TEST_CASE("one percent noise recovers the scale within five percent") {
  const CameraScale s = truth();
  for (unsigned seed : {2u, 3u, 4u, 5u}) {
    const CameraScale f = fit_camera_scale(samples(s, 0.01, seed), xr);
    CHECK(f.scale == approx(s.scale).epsilon(0.05));
    CHECK(std::abs(f.zeta_c - s.zeta_c) < 5.0 * std::sqrt(f.covariance(0, 0)) + 1.0);
    CHECK(f.covariance(1, 1) > 0.0);
  }
}

TEST_CASE("mirrored pixels give mirrored positions") {
  const CameraScale s = truth();
  const double L = fixture::cavity().length;
  for (double d : {10.0, 100.0, 240.0}) {
    const ParticlePosition a = position_from_pixel(s, s.zeta_c + d, L);
    const ParticlePosition b = position_from_pixel(s, s.zeta_c - d, L);
    CHECK(a.x0 == approx(-b.x0).epsilon(1e-12));
    CHECK(a.x0_prime == approx(a.x0 + L / 2.0).epsilon(1e-12));
  }
  CHECK(position_from_pixel(s, s.zeta_c, L).x0 == 0.0);
}

TEST_CASE("frequency ratio at the particle position") {
  // Trap frequency at −1.565 mm relative to the cavity center.
  CameraScale s = truth();
  const double px = s.zeta_c + fixture::x0 / s.scale;
  CHECK(camera_model(s, px) / s.omega_c == approx(0.953).epsilon(1e-3));
  const double back = pixel_from_frequency(s, camera_model(s, px), false);
  CHECK(back == approx(px).epsilon(1e-10));
  CHECK(position_from_pixel(s, back, fixture::cavity().length).x0 ==
        approx(fixture::x0).epsilon(1e-10));
}

TEST_CASE("degenerate calibration geometry") {
  const CameraScale s = truth();
  std::vector<CalibPoint> pts = samples(s, 0.0, 1);
  CHECK_THROWS_AS(fit_camera_scale({pts.begin(), pts.begin() + 3}, xr), DomainError);
  std::vector<CalibPoint> same(6, {400.0, angular(180e3), 0.0});
  CHECK_THROWS_AS(fit_camera_scale(same, xr), DomainError);
  // Constant frequency: ξ collapses and ζ_c is unconstrained.
  std::vector<CalibPoint> flat;
  for (int i = 0; i < 6; ++i) flat.push_back({100.0 * i, s.omega_c, 0.0});
  CHECK_THROWS_AS(fit_camera_scale(flat, xr), NumericalError);
  // Far field only: the curve depends on Ω_c/ξ alone.
  std::vector<CalibPoint> far;
  for (int i = 0; i < 8; ++i) {
    const double px = s.zeta_c + 50.0 * xr / s.scale + 500.0 * i;
    far.push_back({px, camera_model(s, px), 0.0});
  }
  CHECK_THROWS_AS(fit_camera_scale(far, xr), NumericalError);
  CHECK_THROWS_AS(fit_camera_scale(pts, 0.0), DomainError);
}

TEST_CASE("positions outside the cavity are rejected") {
  const CameraScale s = truth();
  const double L = fixture::cavity().length;
  CHECK_THROWS_AS(position_from_pixel(s, s.zeta_c + 0.6 * L / s.scale, L), DomainError);
  CHECK_NOTHROW(position_from_pixel(s, s.zeta_c + 0.49 * L / s.scale, L));
}
