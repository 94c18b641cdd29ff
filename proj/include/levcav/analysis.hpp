#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "levcav/lineshape.hpp"
#include "levcav/params.hpp"
#include "levcav/welch.hpp"

namespace levcav {

struct SpectrumMeta {
  std::optional<double> detuning;  // rad/s
  std::optional<double> kappa;     // rad/s
  double mu = 0.0;
  double pressure = 0.0;  // Pa
  std::string label;
};

/// Noise power spectrum on an increasing grid in Hz.
struct MeasuredSpectrum {
  std::vector<double> freq_hz;
  std::vector<double> values;
  SpectrumMeta meta;
};

void validate(const MeasuredSpectrum& s);

MeasuredSpectrum to_measured(const PowerSpectrum& ps, SpectrumMeta meta);

struct SubtractedSpectrum {
  MeasuredSpectrum spectrum;      // negatives clipped to zero
  std::vector<double> unclipped;  // raw differences
  std::size_t clipped = 0;
};

/// Pointwise signal − background. Grids must agree to 1e-12 relative.
SubtractedSpectrum background_subtract(const MeasuredSpectrum& signal,
                                       const MeasuredSpectrum& background);

/// Divides by the cavity heterodyne transfer at the metadata κ and Δ.
MeasuredSpectrum deconvolve(const MeasuredSpectrum& s);

/// Multiplies by the heterodyne transfer; inverse of deconvolve.
MeasuredSpectrum apply_transfer(const MeasuredSpectrum& s);

struct FrequencyBand {
  double lo_hz = 0.0;
  double hi_hz = 0.0;  // 0 means the whole grid
};

struct OscFitOptions {
  FrequencyBand band;
  FitWeighting weighting = FitWeighting::uniform;
  std::optional<double> calibration;  // a, amplitude per kelvin
  std::optional<LineshapeGuess> guess;
};

/// Oscillator fit f(ω) = a·T*·γ_eff / ((ω² − Ω_eff²)² + ω²γ_eff²).
struct OscFit {
  double omega_eff = 0.0;     // rad/s
  double gamma_eff = 0.0;     // rad/s
  double product = 0.0;       // a·T*, spectrum units × (rad/s)³
  double teff_star = 0.0;     // K; 0 when uncalibrated
  double teff_sigma = 0.0;    // K
  Eigen::Matrix3d covariance = Eigen::Matrix3d::Zero();  // (a·T*, Ω_eff, γ_eff)
  double residual_norm = 0.0;
  int iterations = 0;
  bool converged = false;
  std::string message;

  double omega_sigma() const { return std::sqrt(covariance(1, 1)); }
  double gamma_sigma() const { return std::sqrt(covariance(2, 2)); }
};

/// Throws DomainError when the band holds no resonance (peak < 3× median).
OscFit fit_oscillator(const MeasuredSpectrum& s, const OscFitOptions& options = {});

enum class Quadrature { trapezoid, riemann };

struct Calibration {
  double a = 0.0;    // fitted a·T* per kelvin
  double a_I = 0.0;  // K per (Ω² ∫S dω)
  double reference_temperature = 0.0;
  double reference_omega = 0.0;
  std::string reference_label;
  FrequencyBand band;
};

/// Fixes a and a_I so the reference (|Δ| ≤ κ/100) reads `reference_temperature`.
Calibration calibrate(const MeasuredSpectrum& reference, double reference_temperature,
                      const OscFitOptions& options = {},
                      Quadrature rule = Quadrature::trapezoid);

/// ∫ S dω over the band (ω = 2πf).
double band_integral(const MeasuredSpectrum& s, const FrequencyBand& band,
                     Quadrature rule = Quadrature::trapezoid);

struct IntegratedTemperature {
  double temperature = 0.0;
  double tail_fraction = 0.0;  // model area outside the band; 0 without a model
  std::optional<std::string> warning;
};

/// T^I = a_I Ω_eff² ∫S dω. With `model`, warns if >1% of the fitted area lies outside the band.
IntegratedTemperature integrate_temperature(const MeasuredSpectrum& s, double omega_eff,
                                            const Calibration& cal,
                                            const OscFit* model = nullptr,
                                            Quadrature rule = Quadrature::trapezoid);

struct SweepPoint {
  double detuning = 0.0;  // Δ_set, rad/s
  double omega_eff = 0.0; // measured, rad/s
  double sigma = 0.0;     // rad/s; 0 for unweighted
};

struct SweepFitOptions {
  double kappa = 0.0;
  double gamma_m = 0.0;
  double mass = 1e-17;  // only scales S_xx; Ω_fit does not depend on it
  double band_lo = 0.0, band_hi = 0.0;  // rad/s for theory spectra; 0 = model default
  std::size_t points = 1500;
  FitWeighting weighting = FitWeighting::uniform;
  bool through_transfer = false;  // apply then remove the heterodyne transfer
  std::optional<Eigen::Vector3d> start;  // (g, Ω0, δΔ)
  int max_iterations = 60;
};

struct SweepFit {
  double coupling = 0.0;      // ĝ = g0 √n_c, rad/s
  double omega0 = 0.0;        // rad/s
  double delta_offset = 0.0;  // δΔ, rad/s
  Eigen::Matrix3d covariance = Eigen::Matrix3d::Zero();
  double residual_norm = 0.0;
  double condition_number = 0.0;
  bool identifiable = true;
  bool converged = false;
  std::string message;
};

/// Ω_eff the lineshape fit assigns to a model spectrum at (g, Ω0, Δ).
double theory_fitted_omega(double coupling, double omega0, double detuning,
                           const SweepFitOptions& options);

/// Least-squares (g, Ω0, δΔ) against measured Ω_eff(Δ_set), model Ω_fit(Δ_set + δΔ).
/// Throws DomainError for fewer than 4 points or a span below κ/2, NumericalError when the
/// residual does not depend on any parameter. Poorly conditioned fits and couplings
/// below three standard errors are flagged as not identifiable.
SweepFit fit_detuning_sweep(const std::vector<SweepPoint>& points, const SweepFitOptions& options);

struct WindowAverage {
  double mean = 0.0;
  double stddev = 0.0;  // sample standard deviation
  std::size_t count = 0;
};

/// Mean and sample std of T over lo ≤ Δ ≤ hi (rad/s). At least 2 points required.
WindowAverage window_average_temperature(const std::vector<std::pair<double, double>>& sweep,
                                         double lo, double hi);

struct MuSweep {
  double mu = 0.0;
  double x0 = 0.0;  // m from cavity center
  SweepFit fit;
};

struct CouplingRow {
  double mu = 0.0;
  double coupling = 0.0;  // rad/s
  double sigma = 0.0;
  double theory = 0.0;    // rad/s at the fitted polarizability
};

struct CouplingTable {
  std::vector<CouplingRow> rows;
  double polarizability = 0.0;  // m³ (SI ξ/ε0-free form, C m²/V)
  double polarizability_sigma = 0.0;
  double radius = 0.0;          // m, for the given dielectric constant
  double residual_norm = 0.0;
};

/// Coupling at unit polarizability: g(μ)/√ξ from the trap geometry and the fitted Ω0(μ).
double coupling_per_root_polarizability(const CavitySpec& c, double x0, double mu,
                                        double omega0_mu);

/// One-parameter (polarizability) fit of the trap-geometry coupling to per-μ sweep fits.
CouplingTable coupling_vs_mu(const std::vector<MuSweep>& sweeps, const CavitySpec& c,
                             double dielectric_const);

}  // namespace levcav
