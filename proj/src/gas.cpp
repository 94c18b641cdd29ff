#include "levcav/gas.hpp"

#include <boost/math/tools/roots.hpp>
#include <cmath>
#include <limits>
#include <sstream>

#include "levcav/constants.hpp"
#include "levcav/errors.hpp"

namespace levcav {

namespace {

void check(const GasSpec& g) {
  if (!(g.viscosity > 0.0) || !(g.temperature > 0.0) || !(g.molecule_diameter > 0.0))
    throw DomainError("gas viscosity, temperature and molecule diameter must be positive");
  if (g.pressure < 0.0) throw DomainError("pressure must be non-negative");
}

}  // namespace

double mean_free_path(const GasSpec& g) {
  check(g);
  if (g.pressure == 0.0) return std::numeric_limits<double>::infinity();
  return PhysicalConstants::kB * g.temperature /
         (std::sqrt(2.0) * pi * g.molecule_diameter * g.molecule_diameter * g.pressure);
}

double knudsen_number(const GasSpec& g, const ParticleSpec& p) {
  validate(p);
  return mean_free_path(g) / p.radius;
}

double slip_correction(double kn) {
  if (std::isinf(kn)) return 0.0;
  return 0.31 * kn / (0.785 + 1.152 * kn + kn * kn);
}

double stokes_damping(const GasSpec& g, const ParticleSpec& p) {
  check(g);
  return 6.0 * pi * g.viscosity * p.radius / particle_mass(p);
}

double gas_damping(const GasSpec& g, const ParticleSpec& p) {
  const double stokes = stokes_damping(g, p);
  if (g.pressure == 0.0) return 0.0;
  const double kn = knudsen_number(g, p);
  return stokes * 0.619 / (0.619 + kn) * (1.0 + slip_correction(kn));
}

double pressure_from_damping(const GasSpec& g, const ParticleSpec& p, double target) {
  const double ceiling = stokes_damping(g, p);
  if (target < 0.0) throw DomainError("target damping must be non-negative");
  if (target == 0.0) return 0.0;
  if (target >= ceiling) {
    std::ostringstream os;
    os << "damping " << target << " s^-1 is not reachable: continuum ceiling is " << ceiling;
    throw NumericalError(os.str());
  }
  // Root in log-pressure; γ0 is strictly increasing in P.
  GasSpec trial = g;
  auto residual = [&](double log_p) {
    trial.pressure = std::exp(log_p);
    return gas_damping(trial, p) / target - 1.0;
  };
  double lo = std::log(1e-12), hi = std::log(1e3);
  while (residual(lo) > 0.0) lo -= 10.0;
  while (residual(hi) < 0.0) {
    hi += 5.0;
    if (hi > std::log(1e30)) throw NumericalError("pressure search diverged");
  }
  boost::uintmax_t iters = 300;
  const auto root = boost::math::tools::toms748_solve(
      residual, lo, hi, boost::math::tools::eps_tolerance<double>(52), iters);
  return std::exp(0.5 * (root.first + root.second));
}

}  // namespace levcav
