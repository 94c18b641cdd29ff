#include "levcav/params.hpp"

#include <cmath>
#include <string>

#include "levcav/constants.hpp"
#include "levcav/errors.hpp"

namespace levcav {

void validate(const ParticleSpec& p) {
  if (!(p.radius > 0.0)) throw DomainError("particle radius must be positive");
  if (!(p.density > 0.0)) throw DomainError("particle density must be positive");
  if (!(p.dielectric_const > 1.0))
    throw DomainError("dielectric constant must exceed 1 (no gradient force otherwise)");
}

void validate(const CavitySpec& c) {
  if (!(c.length > 0.0)) throw DomainError("cavity length must be positive");
  if (!(c.finesse >= 1.0)) throw DomainError("finesse must be >= 1");
  if (!(c.wavelength > 0.0)) throw DomainError("wavelength must be positive");
  if (!(c.waist_center > 0.0)) throw DomainError("central waist must be positive");
  if (!(c.waist_center < c.length)) throw DomainError("central waist must be smaller than the cavity length");
}

bool outside_rayleigh_regime(const ParticleSpec& p, double wavelength) {
  return two_pi / wavelength * p.radius > 1.0;
}

double particle_mass(const ParticleSpec& p) {
  validate(p);
  return 4.0 / 3.0 * pi * p.radius * p.radius * p.radius * p.density;
}

double polarizability(const ParticleSpec& p) {
  validate(p);
  const double eps = p.dielectric_const;
  return 4.0 * pi * std::pow(p.radius, 3) * PhysicalConstants::eps0 * (eps - 1.0) / (eps + 2.0);
}

double radius_from_polarizability(double xi, double dielectric_const) {
  if (!(xi > 0.0) || !(dielectric_const > 1.0))
    throw DomainError("polarizability inversion needs xi > 0 and eps > 1");
  const double factor = (dielectric_const - 1.0) / (dielectric_const + 2.0);
  return std::cbrt(xi / (4.0 * pi * PhysicalConstants::eps0 * factor));
}

DerivedCavity derive_cavity(const CavitySpec& c) {
  validate(c);
  DerivedCavity d;
  d.fsr = PhysicalConstants::c / (2.0 * c.length);
  d.kappa = two_pi * d.fsr / c.finesse;
  d.wavenumber = two_pi / c.wavelength;
  d.rayleigh_length = pi * c.waist_center * c.waist_center / c.wavelength;
  d.laser_frequency = two_pi * PhysicalConstants::c / c.wavelength;
  return d;
}

double waist_at(const CavitySpec& c, double x0) {
  validate(c);
  if (std::abs(x0) > c.length / 2.0)
    throw DomainError("position " + std::to_string(x0) + " m lies outside the cavity");
  const double xr = pi * c.waist_center * c.waist_center / c.wavelength;
  return c.waist_center * std::sqrt(1.0 + (x0 / xr) * (x0 / xr));
}

double mode_volume(const CavitySpec& c) {
  return pi / 4.0 * c.waist_center * c.waist_center * c.length;
}

double u0_at(const ParticleSpec& p, const CavitySpec& c, double x0) {
  const DerivedCavity d = derive_cavity(c);
  const double xi = polarizability(p);
  const double peak = d.laser_frequency * xi / (2.0 * PhysicalConstants::eps0 * mode_volume(c));
  const double s = x0 / d.rayleigh_length;
  return peak / (1.0 + s * s);
}

}  // namespace levcav
