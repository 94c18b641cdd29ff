#pragma once

#include <cstdint>
#include <vector>

#include "levcav/dynamics.hpp"

namespace levcav {

struct SimConfig {
  double dt = 0.0;        // s; 0 selects 0.04 / max(Ω0, κ)
  double duration = 0.5;  // s of recorded trace
  std::uint64_t seed = 1;
  std::size_t decimation = 8;
  double transient = 0.0;  // s discarded before recording; 0 selects 10/γ_m
  bool thermal_noise = true;
  double initial_displacement = 0.0;  // m
};

/// Uniformly sampled trace of the particle and the control-field fluctuation.
struct TimeSeries {
  double dt = 0.0;  // sample spacing (s) = integrator step × decimation
  std::vector<double> x;            // m
  std::vector<double> response_re;  // Re(a)/G, m s
  std::vector<double> response_im;  // Im(a)/G, m s
  double field_coupling = 0.0;      // G = g / X_gs, rad/(s m)
  double kappa = 0.0;
  double detuning = 0.0;
  std::uint64_t seed = 0;

  std::size_t size() const { return x.size(); }
  double time(std::size_t i) const { return dt * static_cast<double>(i); }
  /// Dimensionless quadratures of the intracavity field fluctuation.
  double q1(std::size_t i) const { return field_coupling * response_re[i]; }
  double q2(std::size_t i) const { return field_coupling * response_im[i]; }
};

/// Resolved integrator step for a model.
double default_time_step(const BackactionModel& m);

/// Exact-discretization integration of the linearized particle + control-field Langevin
/// equations with white thermal force of two-sided PSD 2 m γ_m k_B T.
/// Throws DomainError for dt·Ω0 ≥ 0.05, InstabilityError for anti-restoring or diverging runs.
TimeSeries simulate(const SimConfig& config, const BackactionModel& model);

struct HeterodyneReadout {
  double kappa = 0.0;
  double zeta_c = 0.0;   // rad/(s m) per sqrt(photon)
  double alpha_c = 0.0;  // sqrt(photons)
  double theta = 1.5707963267948966;  // LO phase; π/2 reads the phase quadrature
  double detection_noise = 0.0;  // white noise, detector units / sqrt(Hz) (one-sided)
  std::uint64_t noise_seed = 0;
};

/// s(t) = √κ (a_r e^{iθ} + a_r* e^{−iθ}) with a_r the field fluctuation the readout
/// coupling ζ_c α_c would produce (transmission port, unit local-oscillator amplitude).
std::vector<double> synth_heterodyne(const TimeSeries& ts, const HeterodyneReadout& readout);

}  // namespace levcav
