#pragma once

#include <complex>

#include "levcav/params.hpp"

namespace levcav {

// Two-mode standing-wave trap.
//
// Phase convention: the control standing wave is sin²(k x) with the reference plane x0'
// placed where k·x0' ≡ 0 (mod π); the trapping wave is sin²(k x + φ) with φ = π x0'/L.
// The particle equilibrium offset x̄ is measured from that reference plane.

/// φ = π x0'/L. x0' is the distance from the cavity mirror.
double phase_shift(double x0_prime, double length);

/// Stable root of tan(2k x̄) = −sin2φ / (μ + cos2φ), returned in (−λ/4, λ/4].
double equilibrium_displacement(double mu, double phi, double wavenumber);

/// Ω0(μ) = Ω0(0) (1 + μ² + 2μ cos2φ)^{1/4}. Throws InstabilityError if the radicand is ≤ 0.
double trap_frequency(double mu, double phi, double omega0_bare);

/// Ω0(0) = sqrt(2 ħ U0 k² n_t / m).
double bare_frequency(double mass, double u0, double wavenumber, double trap_photons);

/// Trapping photon number giving bare frequency omega0_bare (inverse of bare_frequency).
double photons_for_frequency(double mass, double u0, double wavenumber, double omega0_bare);

/// Photon number of a standing-wave mode carrying one-way circulating power `power`.
double photons_from_power(double power, const CavitySpec& c);

/// Closed-form trap frequency from circulating power and local waist, using the
/// standard point-dipole gradient-force expression with W² in the intensity.
double frequency_from_power_formula(const ParticleSpec& p, const CavitySpec& c, double power,
                                    double waist);

/// Ground-state extension sqrt(ħ / (m Ω)).
double ground_state_extension(double mass, double omega);

struct CouplingRates {
  double control = 0.0;  // g0,c (rad/s), the single-photon coupling of the main text
  double trap = 0.0;     // g0,t
};

CouplingRates coupling_rates(double u0, double wavenumber, double xgs, double xbar, double phi);

struct FieldAmplitudes {
  std::complex<double> trap;
  std::complex<double> control;
};

/// Steady-state intracavity amplitudes with the trapping beam locked on resonance.
/// `detuning` is the control-beam detuning from the particle-shifted resonance.
FieldAmplitudes steady_state_amplitudes(double drive_trap, double drive_control, double kappa,
                                        double detuning);

/// |E_c/E_t|² needed to reach intracavity ratio mu at the given detuning.
double drive_ratio_for_mu(double mu, double kappa, double detuning);

/// Net axial force (in units of ħ U0 k) at offset x from the reference plane, per trapping photon.
double normalized_force(double mu, double phi, double wavenumber, double x);

/// How the trap strength is specified.
struct TrapDrive {
  enum class Kind { photons, power, bare_frequency };
  Kind kind = Kind::bare_frequency;
  double value = 0.0;  // photons | W (one-way circulating) | rad/s
};

struct TrapState {
  double x0 = 0.0;         // m from cavity center (signed)
  double x0_prime = 0.0;   // m from mirror
  double phi = 0.0;        // rad
  double mu = 0.0;
  double xbar = 0.0;       // m
  double mass = 0.0;       // kg
  double u0 = 0.0;         // rad/s at x0
  double omega0_bare = 0.0;  // Ω0(0), rad/s
  double omega0 = 0.0;       // Ω0(μ), rad/s
  double xgs = 0.0;          // m, evaluated at Ω0(μ)
  double trap_photons = 0.0;
  double control_photons = 0.0;
  CouplingRates g0;
  /// g0,c sqrt(n_c): the many-photon coupling entering the backaction model.
  double coupling() const;
};

/// Full steady-state chain for a particle at x0 (from center) with power ratio mu.
TrapState solve_trap(const ParticleSpec& p, const CavitySpec& c, double x0, double mu,
                     const TrapDrive& drive);

}  // namespace levcav
