#include <doctest.h>

#include "approx.hpp"

#include <boost/random/mersenne_twister.hpp>
#include <boost/random/uniform_real_distribution.hpp>
#include <cmath>

#include "levcav/errors.hpp"
#include "levcav/gas.hpp"
#include "fixture.hpp"

using namespace levcav;

namespace {

// Hand evaluation of the damping chain, written out term by term.
double oracle(double pressure, double radius, double density) {
  const double kb = 1.380649e-23, eta = 1.81e-5, temp = 293.0, d = 0.372e-9;
  const double mass = 4.0 / 3.0 * M_PI * radius * radius * radius * density;
  const double lfp = kb * temp / (std::sqrt(2.0) * M_PI * d * d * pressure);
  const double kn = lfp / radius;
  const double ck = 0.31 * kn / (0.785 + 1.152 * kn + kn * kn);
  return 6.0 * M_PI * eta * radius / mass * 0.619 / (0.619 + kn) * (1.0 + ck);
}

}  // namespace

TEST_CASE("worked point at 400 Pa") {
  GasSpec g;
  g.pressure = 400.0;
  const ParticleSpec p = fixture::particle();
  CHECK(knudsen_number(g, p) == approx(97.3).epsilon(0.01));
  CHECK(gas_damping(g, p) == approx(9.28e3).epsilon(0.01));
  CHECK(gas_damping(g, p) == approx(oracle(400.0, 169e-9, 1950.0)).epsilon(1e-12));
}

TEST_CASE("random points agree with the hand oracle") {
  boost::random::mt19937_64 rng(7);
  boost::random::uniform_real_distribution<double> lp(-1.0, 5.0), lr(50e-9, 500e-9);
  for (int i = 0; i < 10; ++i) {
    const double pr = std::pow(10.0, lp(rng)), r = lr(rng);
    GasSpec g;
    g.pressure = pr;
    const ParticleSpec p{r, 1950.0, 2.1};
    CHECK(gas_damping(g, p) == approx(oracle(pr, r, 1950.0)).epsilon(1e-9));
  }
}

TEST_CASE("continuum limit and free-molecular scaling") {
  const ParticleSpec p = fixture::particle();
  GasSpec g;
  g.pressure = 1e9;
  CHECK(gas_damping(g, p) == approx(stokes_damping(g, p)).epsilon(1e-4));
  g.pressure = 0.0;
  CHECK(gas_damping(g, p) == 0.0);
  CHECK(std::isinf(mean_free_path(g)));

  // Kn >> 1: γ0 ∝ 1/r at fixed pressure.
  g.pressure = 1.0;
  const ParticleSpec p2{2.0 * p.radius, p.density, p.dielectric_const};
  CHECK(gas_damping(g, p) / gas_damping(g, p2) == approx(2.0).epsilon(1e-4));
}

TEST_CASE("slip correction vanishes in both limits and is bounded") {
  CHECK(slip_correction(0.0) == 0.0);
  CHECK(slip_correction(1e8) < 1e-8);
  double peak = 0.0;
  for (double kn = 1e-3; kn < 1e3; kn *= 1.01) peak = std::max(peak, slip_correction(kn));
  CHECK(peak == approx(0.106).epsilon(0.01));
  CHECK(peak < 0.31);
}

TEST_CASE("damping is strictly increasing in pressure") {
  const ParticleSpec p = fixture::particle();
  GasSpec g;
  double prev = 0.0;
  for (double pr = 1e-3; pr <= 1e5; pr *= 1.2) {
    g.pressure = pr;
    const double v = gas_damping(g, p);
    CHECK(v > prev);
    prev = v;
  }
}

TEST_CASE("inverse lookup round trips") {
  const ParticleSpec p = fixture::particle();
  GasSpec g;
  for (double pr : {1e-2, 3.0, 400.0, 2e4}) {
    g.pressure = pr;
    const double gamma = gas_damping(g, p);
    const double back = pressure_from_damping(g, p, gamma);
    g.pressure = back;
    CHECK(gas_damping(g, p) == approx(gamma).epsilon(1e-9));
    CHECK(back == approx(pr).epsilon(1e-6));
  }
  CHECK(pressure_from_damping(g, p, 1e-6) < 1e-6);
  CHECK_THROWS_AS(pressure_from_damping(g, p, 1.01 * stokes_damping(g, p)), NumericalError);
}

TEST_CASE("half the ceiling sits near the crossover, checked by bisection") {
  const ParticleSpec p = fixture::particle();
  GasSpec g;
  const double target = 0.5 * stokes_damping(g, p);
  double lo = 1e-2, hi = 1e6;
  for (int i = 0; i < 200; ++i) {
    const double mid = std::sqrt(lo * hi);
    g.pressure = mid;
    (gas_damping(g, p) < target ? lo : hi) = mid;
  }
  const double found = pressure_from_damping(g, p, target);
  CHECK(found == approx(std::sqrt(lo * hi)).epsilon(1e-8));
  g.pressure = found;
  CHECK(knudsen_number(g, p) == approx(0.749).epsilon(0.01));
}
