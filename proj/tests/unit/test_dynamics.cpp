#include <doctest.h>

#include "approx.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <complex>

#include "levcav/constants.hpp"
#include "levcav/dynamics.hpp"
#include "levcav/errors.hpp"

using namespace levcav;
using cd = std::complex<double>;

namespace {

const double kB = 1.380649e-23;

BackactionModel nominal(double detuning_khz) {
  BackactionModel m;
  m.omega0 = angular(165e3);
  m.gamma_m = angular(7.2e3);
  m.kappa = angular(179.8e3);
  m.detuning = angular(detuning_khz * 1e3);
  m.coupling = angular(66e3);
  m.mass = 3.94e-17;
  return m;
}

// Response of x to a force, solved directly from the coupled linear equations
// da/dt = −(κ/2 + iΔ) a + i G x,  m d²x/dt² = −m Ω0² x − m γ dx/dt + 2ħG Re a + F,
// in the e^{−iωt} convention with ħG²/m = g² Ω0.
cd oracle_chi(const BackactionModel& m, double w) {
  const double h = m.kappa / 2.0;
  const cd i(0.0, 1.0);
  const cd self = i * m.coupling * m.coupling * m.omega0 *
                  (1.0 / (h + i * (m.detuning - w)) - 1.0 / (h - i * (m.detuning + w)));
  return 1.0 / (m.mass * (m.omega0 * m.omega0 - w * w - i * w * m.gamma_m - self));
}

}  // namespace

TEST_CASE("susceptibility equals the coupled-equation response") {
  for (double d : {-60.0, 0.0, 25.0, 125.0, 175.0, 300.0}) {
    const BackactionModel m = nominal(d);
    for (double f : {20e3, 100e3, 160e3, 170e3, 400e3}) {
      const cd a = effective_susceptibility(m, angular(f));
      const cd b = oracle_chi(m, angular(f));
      CHECK(a.real() == approx(b.real()).epsilon(1e-9));
      CHECK(a.imag() == approx(b.imag()).epsilon(1e-9));
    }
  }
}

TEST_CASE("red detuning cools, blue heats, resonance is neutral") {
  CHECK(backaction(nominal(125), angular(165e3)).gamma_eff > angular(7.2e3));
  CHECK(backaction(nominal(-125), angular(165e3)).gamma_eff < angular(7.2e3));
  const Backaction z = backaction(nominal(0), angular(165e3));
  CHECK(z.gamma_eff == approx(angular(7.2e3)));
  CHECK(z.omega_eff == approx(angular(165e3)));
}

TEST_CASE("zero coupling leaves the oscillator bare") {
  BackactionModel m = nominal(125);
  m.coupling = 0.0;
  const Backaction b = backaction(m, angular(80e3));
  CHECK(b.gamma_eff == m.gamma_m);
  CHECK(b.omega_eff == m.omega0);
}

TEST_CASE("bare thermal spectrum satisfies equipartition") {
  BackactionModel m = nominal(0);
  m.coupling = 0.0;
  auto f = [&](double w) { return thermal_psd(m, w); };
  using GK = boost::math::quadrature::gauss_kronrod<double, 61>;
  const double w0 = m.omega0, g = m.gamma_m;
  double area = GK::integrate(f, 0.0, w0 - 10 * g, 15, 1e-12) + GK::integrate(f, w0 - 10 * g, w0, 15, 1e-12) +
                GK::integrate(f, w0, w0 + 10 * g, 15, 1e-12) +
                GK::integrate(f, w0 + 10 * g, std::numeric_limits<double>::infinity(), 15, 1e-12);
  CHECK(area / M_PI == approx(kB * 293.0 / (m.mass * w0 * w0)).epsilon(1e-6));
  const TheoryTemperature t = teff_theory(m);
  CHECK(t.temperature == approx(293.0).epsilon(1e-4));
}

TEST_CASE("heterodyne transfer") {
  const double kappa = angular(179.8e3);
  CHECK(heterodyne_transfer(kappa, 0.0, 0.0) == approx(16.0 / (kappa * kappa)).epsilon(1e-12));
  for (double d : {0.0, 125e3}) {
    for (double f : {10e3, 165e3, 500e3}) {
      const double w = angular(f), dd = angular(d);
      const cd chi = 1.0 / cd(kappa / 2, -(w - dd));
      const cd chim = std::conj(1.0 / cd(kappa / 2, -(-w - dd)));
      CHECK(heterodyne_transfer(kappa, dd, w) == approx(std::norm(chi + chim)).epsilon(1e-12));
      const double h = kappa / 2;
      const double closed = (kappa * kappa + 4 * w * w) / ((h * h + (w + dd) * (w + dd)) * (h * h + (w - dd) * (w - dd)));
      CHECK(heterodyne_transfer(kappa, dd, w) == approx(closed).epsilon(1e-12));
    }
  }
  CHECK(heterodyne_transfer(kappa, 0.0, 1e5) == approx(heterodyne_transfer(kappa, 0.0, -1e5)));
  const BackactionModel m = nominal(125);
  const double w = angular(150e3);
  CHECK(heterodyne_psd(m, 3.0, 2.0, w) ==
        approx(m.kappa * 36.0 * heterodyne_transfer(m.kappa, m.detuning, w) * thermal_psd(m, w)));
}

TEST_CASE("sideband rates carry half the backaction damping") {
  for (double d : {-100.0, 50.0, 165.0, 250.0}) {
    const BackactionModel m = nominal(d);
    const SidebandRates s = sideband_rates(m.coupling, m.kappa, m.detuning, m.omega0);
    const double extra = backaction(m, m.omega0).gamma_eff - m.gamma_m;
    CHECK(s.cooling == approx(0.5 * extra).epsilon(1e-10));
    CHECK(s.cooling == approx(s.anti_stokes - s.stokes));
  }
  const SidebandRates r = sideband_rates(angular(66e3), angular(179.8e3), angular(165e3), angular(165e3));
  CHECK(r.anti_stokes > r.stokes);
}

TEST_CASE("maximum backaction damping at the nominal parameters") {
  const CoolingPeak p = max_cooling_rate(nominal(0), 0.0, angular(1e6));
  CHECK(in_hz(p.rate) == approx(45.06e3).epsilon(2e-3));
  CHECK(in_hz(p.detuning) == approx(166.6e3).epsilon(5e-3));
  const BackactionModel at = nominal(in_hz(p.detuning) / 1e3);
  CHECK(backaction(at, at.omega0).gamma_eff - at.gamma_m == approx(p.rate).epsilon(1e-9));
  for (double d : {0.8, 0.95, 1.05, 1.2}) {
    const BackactionModel n = nominal(in_hz(p.detuning) * d / 1e3);
    CHECK(backaction(n, n.omega0).gamma_eff - n.gamma_m < p.rate);
  }
}

TEST_CASE("effective resonance is self-consistent") {
  for (double d : {25.0, 125.0, 175.0}) {
    const BackactionModel m = nominal(d);
    const Backaction r = effective_resonance(m);
    CHECK(backaction(m, r.omega_eff).omega_eff == approx(r.omega_eff).epsilon(1e-10));
  }
}

TEST_CASE("theory temperatures along the red-detuned sweep") {
  const std::pair<double, double> table[] = {{0, 293.0}, {25, 172.0}, {75, 94.0}, {100, 77.0},
                                             {125, 66.5}, {150, 58.9}, {175, 51.8}};
  double prev = 1e9;
  for (const auto& [d, t] : table) {
    const double got = teff_theory(nominal(d)).temperature;
    CHECK(got == approx(t).epsilon(0.01));
    CHECK(got < prev + 1e-9);
    prev = got;
  }
}

TEST_CASE("temperature times damping is conserved for weak coupling") {
  for (double frac : {0.02, 0.05, 0.1}) {
    BackactionModel m = nominal(0);
    m.coupling = frac * m.kappa;
    for (double d : {50.0, 125.0, 200.0}) {
      m.detuning = angular(d * 1e3);
      const Backaction r = effective_resonance(m);
      const double t = teff_theory(m).temperature;
      CHECK(t * r.gamma_eff == approx(293.0 * m.gamma_m).epsilon(0.05));
    }
  }
}

TEST_CASE("instabilities are reported") {
  BackactionModel m = nominal(90);  // red detuning softens the static spring
  m.coupling = angular(200e3);
  CHECK_THROWS_AS(backaction(m, 0.0), InstabilityError);
  BackactionModel p = nominal(-165);
  CHECK(backaction(p, p.omega0).parametric_instability);
  BackactionModel bad = nominal(0);
  bad.kappa = -1.0;
  CHECK_THROWS_AS(validate(bad), DomainError);
}

TEST_CASE("model spectra on a grid") {
  const BackactionModel m = nominal(125);
  const auto grid = linear_grid(1.0, 10.0, 10);
  CHECK(grid.size() == 10);
  CHECK(grid.front() == 1.0);
  CHECK(grid.back() == 10.0);
  const SpectrumModel s = displacement_spectrum(m, grid);
  const SpectrumModel h = heterodyne_spectrum(m, 1.0, 1.0, grid);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    CHECK(s.values[i] == thermal_psd(m, grid[i]));
    CHECK(h.values[i] == approx(heterodyne_psd(m, 1.0, 1.0, grid[i])));
  }
}
