#pragma once

#include "levcav/params.hpp"

namespace levcav {

struct GasSpec {
  double viscosity = 1.81e-5;           // Pa s (air, 293 K)
  double temperature = 293.0;           // K
  double molecule_diameter = 0.372e-9;  // m (air)
  double pressure = 0.0;                // Pa
};

/// Hard-sphere mean free path k_B T / (√2 π d² P). Infinite at zero pressure.
double mean_free_path(const GasSpec& g);

double knudsen_number(const GasSpec& g, const ParticleSpec& p);

/// Beresnev slip correction c_k = 0.31 Kn / (0.785 + 1.152 Kn + Kn²).
double slip_correction(double knudsen);

/// γ0 = (6πηr/m) · 0.619/(0.619 + Kn) · (1 + c_k), rad/s. Zero at zero pressure.
double gas_damping(const GasSpec& g, const ParticleSpec& p);

/// Continuum (Stokes) limit 6πηr/m, the supremum of gas_damping over pressure.
double stokes_damping(const GasSpec& g, const ParticleSpec& p);

/// Pressure (Pa) at which gas_damping equals target. `g.pressure` is ignored.
/// Throws NumericalError when target is at or above the Stokes ceiling.
double pressure_from_damping(const GasSpec& g, const ParticleSpec& p, double target);

}  // namespace levcav
