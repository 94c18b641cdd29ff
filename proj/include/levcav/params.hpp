#pragma once

namespace levcav {

struct ParticleSpec {
  double radius = 0.0;            // m
  double density = 0.0;           // kg/m^3
  double dielectric_const = 0.0;  // relative permittivity
};

struct CavitySpec {
  double length = 0.0;        // m
  double finesse = 0.0;
  double wavelength = 0.0;    // m
  double waist_center = 0.0;  // W0, m
};

struct DerivedCavity {
  double fsr = 0.0;             // Hz
  double kappa = 0.0;           // rad/s, FWHM energy decay rate
  double wavenumber = 0.0;      // rad/m
  double rayleigh_length = 0.0; // m
  double laser_frequency = 0.0; // rad/s
};

/// Throws DomainError when the particle violates radius > 0, density > 0, ε > 1.
void validate(const ParticleSpec& p);
void validate(const CavitySpec& c);

/// True when k r > 1, i.e. the point-dipole picture is questionable.
bool outside_rayleigh_regime(const ParticleSpec& p, double wavelength);

double particle_mass(const ParticleSpec& p);

/// Dipole polarizability 4πr³ε₀(ε−1)/(ε+2), in F·m².
double polarizability(const ParticleSpec& p);

DerivedCavity derive_cavity(const CavitySpec& c);

/// Gaussian-beam waist a signed distance x0 from the cavity center.
double waist_at(const CavitySpec& c, double x0);

/// Standing-wave Gaussian mode volume (π/4)W0²L.
double mode_volume(const CavitySpec& c);

/// Single-photon resonance shift U0(x0) = ω ξ / (2 ε0 V) / (1 + x0²/xR²), rad/s.
/// x0 is measured from the cavity center.
double u0_at(const ParticleSpec& p, const CavitySpec& c, double x0);

/// Inverse of the polarizability relation: radius giving polarizability xi for dielectric eps.
double radius_from_polarizability(double xi, double dielectric_const);

}  // namespace levcav
