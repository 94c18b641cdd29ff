#pragma once

#include <complex>
#include <vector>

namespace levcav {

// Linearized dynamical backaction of the control field on the axial motion.
//
// Detuning convention: Δ = ω_cav − ω_control, so Δ > 0 is red detuning and cools.
// All spectra are two-sided densities per unit angular frequency, normalized so that
// <x²> = (1/π) ∫_0^∞ S_xx(ω) dω.

struct BackactionModel {
  double omega0 = 0.0;    // Ω0(μ), rad/s
  double gamma_m = 0.0;   // gas damping, rad/s
  double kappa = 0.0;     // cavity FWHM, rad/s
  double detuning = 0.0;  // Δ, rad/s
  double coupling = 0.0;  // g = g0,c sqrt(n_c), rad/s
  double bath_temperature = 293.0;  // K
  double mass = 0.0;      // kg
};

void validate(const BackactionModel& m);

struct Backaction {
  double gamma_eff = 0.0;
  double omega_eff = 0.0;
  double omega_eff_sq = 0.0;
  bool parametric_instability = false;  // γ_eff < 0; reported, not thrown
};

/// γ_eff(ω) and Ω_eff(ω). Throws InstabilityError when Ω_eff(ω)² ≤ 0.
Backaction backaction(const BackactionModel& m, double omega);

/// Mechanical response x/F = 1 / (m (Ω_eff(ω)² − ω² − iωγ_eff(ω))).
std::complex<double> effective_susceptibility(const BackactionModel& m, double omega);

/// Thermal displacement spectrum |χ|² · 2 m γ_m k_B T (m² s). Radiation-pressure noise is zero.
double thermal_psd(const BackactionModel& m, double omega);

struct SidebandRates {
  double stokes = 0.0;       // A+
  double anti_stokes = 0.0;  // A-
  double cooling = 0.0;      // Γ = A- − A+
};

SidebandRates sideband_rates(double coupling, double kappa, double detuning, double omega0);

/// |χ_c(ω) + χ_c*(−ω)|² with χ_c(ω) = 1 / (κ/2 − i(ω − Δ)).
double heterodyne_transfer(double kappa, double detuning, double omega);

/// Phase-quadrature detector spectrum κ ζ_c² α_c² · transfer · S_xx.
double heterodyne_psd(const BackactionModel& m, double alpha_c, double zeta_c, double omega);

struct CoolingPeak {
  double detuning = 0.0;  // rad/s
  double rate = 0.0;      // max of γ_eff(Ω0) − γ_m, rad/s
};

/// Maximum backaction damping at ω = Ω0 over Δ ∈ [lo, hi]; m.detuning is ignored.
CoolingPeak max_cooling_rate(const BackactionModel& m, double lo, double hi);

/// Self-consistent resonance ω_r = Ω_eff(ω_r) near Ω0, with γ_eff(ω_r).
Backaction effective_resonance(const BackactionModel& m);

enum class SpectrumKind { displacement, heterodyne };

struct SpectrumModel {
  std::vector<double> omega;   // rad/s, strictly increasing
  std::vector<double> values;  // m²/(rad/s) or detector units²/(rad/s)
  SpectrumKind kind = SpectrumKind::displacement;
};

SpectrumModel displacement_spectrum(const BackactionModel& m, const std::vector<double>& omega);
SpectrumModel heterodyne_spectrum(const BackactionModel& m, double alpha_c, double zeta_c,
                                  const std::vector<double>& omega);

std::vector<double> linear_grid(double lo, double hi, std::size_t points);

struct TheoryFitBand {
  double lo = 0.0;  // rad/s; 0 selects 0.06 Ω0
  double hi = 0.0;  // rad/s; 0 selects 3.6 Ω0
  std::size_t points = 3000;
};

struct TheoryTemperature {
  double temperature = 0.0;  // K
  double omega_fit = 0.0;    // fitted resonance of S_xx, rad/s
  double gamma_fit = 0.0;    // fitted linewidth, rad/s
  double variance = 0.0;     // (1/π) ∫ S_xx dω, m²
};

/// Equipartition temperature of the model spectrum, m Ω_fit² <x²> / k_B, with Ω_fit
/// from a lineshape fit to S_xx over `band`. Quadrature over [0, Ω0 + 50κ] to 1e-6 relative.
TheoryTemperature teff_theory(const BackactionModel& m, const TheoryFitBand& band = {});

/// Resolved default fit band for a model.
TheoryFitBand resolve_band(const BackactionModel& m, const TheoryFitBand& band);

}  // namespace levcav
