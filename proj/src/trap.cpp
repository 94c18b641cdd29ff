#include "levcav/trap.hpp"

#include <cmath>

#include "levcav/constants.hpp"
#include "levcav/errors.hpp"

namespace levcav {

double phase_shift(double x0_prime, double length) {
  if (!(length > 0.0)) throw DomainError("cavity length must be positive");
  if (x0_prime < 0.0 || x0_prime > length)
    throw DomainError("trap position lies outside the cavity");
  return pi * x0_prime / length;
}

double equilibrium_displacement(double mu, double phi, double wavenumber) {
  if (mu < 0.0) throw DomainError("power ratio mu must be non-negative");
  // Ω0² ∝ −Re(e^{2ikx̄} A) with A = (μ + cos2φ) + i sin2φ; the minimum needs e^{2ikx̄} A = −|A|.
  const double arg_a = std::atan2(std::sin(2.0 * phi), mu + std::cos(2.0 * phi));
  double two_kx = pi - arg_a;
  two_kx = std::remainder(two_kx, two_pi);
  if (two_kx <= -pi) two_kx += two_pi;
  return two_kx / (2.0 * wavenumber);
}

double trap_frequency(double mu, double phi, double omega0_bare) {
  if (mu < 0.0) throw DomainError("power ratio mu must be non-negative");
  const double radicand = 1.0 + mu * mu + 2.0 * mu * std::cos(2.0 * phi);
  if (!(radicand > 0.0)) throw InstabilityError("trap vanishes: 1 + mu^2 + 2 mu cos(2 phi) <= 0");
  return omega0_bare * std::pow(radicand, 0.25);
}

double bare_frequency(double mass, double u0, double wavenumber, double trap_photons) {
  if (!(mass > 0.0) || !(u0 > 0.0) || !(wavenumber > 0.0) || !(trap_photons > 0.0))
    throw DomainError("bare_frequency needs positive mass, U0, k and photon number");
  return std::sqrt(2.0 * PhysicalConstants::hbar * u0 * wavenumber * wavenumber * trap_photons /
                   mass);
}

double photons_for_frequency(double mass, double u0, double wavenumber, double omega0_bare) {
  if (!(mass > 0.0) || !(u0 > 0.0) || !(wavenumber > 0.0) || !(omega0_bare > 0.0))
    throw DomainError("photons_for_frequency needs positive inputs");
  return mass * omega0_bare * omega0_bare /
         (2.0 * PhysicalConstants::hbar * u0 * wavenumber * wavenumber);
}

double photons_from_power(double power, const CavitySpec& c) {
  const DerivedCavity d = derive_cavity(c);
  const double round_trip = 2.0 * c.length / PhysicalConstants::c;
  return power * round_trip / (PhysicalConstants::hbar * d.laser_frequency);
}

double frequency_from_power_formula(const ParticleSpec& p, const CavitySpec& c, double power,
                                    double waist) {
  validate(p);
  const double k = two_pi / c.wavelength;
  const double eps = p.dielectric_const;
  const double material = (eps - 1.0) / (eps + 2.0) / p.density;
  const double prefactor = 12.0 * k * k / (PhysicalConstants::c * pi) * material;
  return std::sqrt(prefactor) * std::sqrt(power / (pi * waist * waist));
}

double ground_state_extension(double mass, double omega) {
  if (!(mass > 0.0) || !(omega > 0.0)) throw DomainError("ground-state extension needs m, omega > 0");
  return std::sqrt(PhysicalConstants::hbar / (mass * omega));
}

CouplingRates coupling_rates(double u0, double wavenumber, double xgs, double xbar, double phi) {
  const double scale = u0 * wavenumber * xgs;
  const double s = 2.0 * wavenumber * xbar;
  return {scale * std::sin(s), scale * std::sin(s + 2.0 * phi)};
}

FieldAmplitudes steady_state_amplitudes(double drive_trap, double drive_control, double kappa,
                                        double detuning) {
  if (!(kappa > 0.0)) throw DomainError("kappa must be positive");
  const std::complex<double> denom(kappa / 2.0, detuning);
  return {std::complex<double>(drive_trap / (kappa / 2.0), 0.0), drive_control / denom};
}

double drive_ratio_for_mu(double mu, double kappa, double detuning) {
  const double r = 2.0 * detuning / kappa;
  return mu * (1.0 + r * r);
}

double normalized_force(double mu, double phi, double wavenumber, double x) {
  const double s = 2.0 * wavenumber * x;
  return std::sin(s + 2.0 * phi) + mu * std::sin(s);
}

double TrapState::coupling() const { return g0.control * std::sqrt(control_photons); }

TrapState solve_trap(const ParticleSpec& p, const CavitySpec& c, double x0, double mu,
                     const TrapDrive& drive) {
  if (std::abs(x0) > c.length / 2.0) throw DomainError("trap position lies outside the cavity");
  const DerivedCavity d = derive_cavity(c);
  TrapState s;
  s.x0 = x0;
  s.x0_prime = x0 + c.length / 2.0;
  s.phi = phase_shift(s.x0_prime, c.length);
  s.mu = mu;
  s.mass = particle_mass(p);
  s.u0 = u0_at(p, c, x0);
  switch (drive.kind) {
    case TrapDrive::Kind::photons:
      s.trap_photons = drive.value;
      break;
    case TrapDrive::Kind::power:
      s.trap_photons = photons_from_power(drive.value, c);
      break;
    case TrapDrive::Kind::bare_frequency:
      s.trap_photons = photons_for_frequency(s.mass, s.u0, d.wavenumber, drive.value);
      break;
  }
  s.omega0_bare = bare_frequency(s.mass, s.u0, d.wavenumber, s.trap_photons);
  s.omega0 = trap_frequency(mu, s.phi, s.omega0_bare);
  s.xbar = equilibrium_displacement(mu, s.phi, d.wavenumber);
  s.xgs = ground_state_extension(s.mass, s.omega0);
  s.control_photons = mu * s.trap_photons;
  s.g0 = coupling_rates(s.u0, d.wavenumber, s.xgs, s.xbar, s.phi);
  return s;
}

}  // namespace levcav
