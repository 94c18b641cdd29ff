#include "levcav/dynamics.hpp"

#include <algorithm>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/minima.hpp>
#include <boost/math/tools/roots.hpp>
#include <cmath>
#include <limits>
#include <sstream>

#include "levcav/constants.hpp"
#include "levcav/errors.hpp"
#include "levcav/lineshape.hpp"

namespace levcav {

void validate(const BackactionModel& m) {
  if (!(m.omega0 > 0.0)) throw DomainError("omega0 must be positive");
  if (!(m.gamma_m > 0.0)) throw DomainError("gamma_m must be positive");
  if (!(m.kappa > 0.0)) throw DomainError("kappa must be positive");
  if (!(m.coupling >= 0.0)) throw DomainError("coupling must be non-negative");
  if (!(m.mass > 0.0)) throw DomainError("mass must be positive");
  if (!(m.bath_temperature > 0.0)) throw DomainError("bath temperature must be positive");
}

namespace {

// ((κ/2)² + (ω+Δ)²)((κ/2)² + (ω−Δ)²)
double sideband_denominator(double kappa, double detuning, double w) {
  const double h2 = kappa * kappa / 4.0;
  const double p = w + detuning, q = w - detuning;
  return (h2 + p * p) * (h2 + q * q);
}

}  // namespace

Backaction backaction(const BackactionModel& m, double w) {
  const double h = m.kappa / 2.0;
  const double d = sideband_denominator(m.kappa, m.detuning, w);
  const double g2 = m.coupling * m.coupling;
  Backaction b;
  b.gamma_eff = m.gamma_m + 4.0 * g2 * m.omega0 * m.detuning * h / d;
  b.omega_eff_sq =
      m.omega0 * m.omega0 -
      2.0 * g2 * m.omega0 * m.detuning * (h * h - w * w + m.detuning * m.detuning) / d;
  if (!(b.omega_eff_sq > 0.0)) {
    std::ostringstream os;
    os << "optical spring is anti-restoring at omega=" << w << " rad/s (Omega_eff^2="
       << b.omega_eff_sq << ")";
    throw InstabilityError(os.str());
  }
  b.omega_eff = std::sqrt(b.omega_eff_sq);
  b.parametric_instability = b.gamma_eff < 0.0;
  return b;
}

std::complex<double> effective_susceptibility(const BackactionModel& m, double w) {
  const Backaction b = backaction(m, w);
  return 1.0 / (m.mass * std::complex<double>(b.omega_eff_sq - w * w, -w * b.gamma_eff));
}

double thermal_psd(const BackactionModel& m, double w) {
  const double force_psd = 2.0 * m.mass * m.gamma_m * PhysicalConstants::kB * m.bath_temperature;
  return std::norm(effective_susceptibility(m, w)) * force_psd;
}

SidebandRates sideband_rates(double coupling, double kappa, double detuning, double omega0) {
  if (!(kappa > 0.0)) throw DomainError("kappa must be positive");
  const double h2 = kappa * kappa / 4.0;
  const double g2 = coupling * coupling;
  SidebandRates s;
  s.stokes = 0.25 * g2 * kappa / (h2 + (detuning + omega0) * (detuning + omega0));
  s.anti_stokes = 0.25 * g2 * kappa / (h2 + (detuning - omega0) * (detuning - omega0));
  s.cooling = s.anti_stokes - s.stokes;
  return s;
}

double heterodyne_transfer(double kappa, double detuning, double w) {
  if (!(kappa > 0.0)) throw DomainError("kappa must be positive");
  const std::complex<double> chi(1.0 / std::complex<double>(kappa / 2.0, -(w - detuning)));
  const std::complex<double> chi_mirror =
      std::conj(1.0 / std::complex<double>(kappa / 2.0, -(-w - detuning)));
  return std::norm(chi + chi_mirror);
}

double heterodyne_psd(const BackactionModel& m, double alpha_c, double zeta_c, double w) {
  return m.kappa * zeta_c * zeta_c * alpha_c * alpha_c *
         heterodyne_transfer(m.kappa, m.detuning, w) * thermal_psd(m, w);
}

CoolingPeak max_cooling_rate(const BackactionModel& m, double lo, double hi) {
  validate(m);
  if (!(hi > lo)) throw DomainError("max_cooling_rate: empty detuning range");
  const double w = m.omega0, g2 = m.coupling * m.coupling, hk = m.kappa / 2.0;
  auto rate = [&](double d) { return 4.0 * g2 * w * d * hk / sideband_denominator(m.kappa, d, w); };
  const std::size_t n = 2001;
  std::size_t best = 0;
  double best_rate = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    const double d = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
    if (rate(d) > best_rate) {
      best_rate = rate(d);
      best = i;
    }
  }
  const double step = (hi - lo) / static_cast<double>(n - 1);
  const double a = std::max(lo, lo + step * (static_cast<double>(best) - 1.0));
  const double b = std::min(hi, lo + step * (static_cast<double>(best) + 1.0));
  const auto r = boost::math::tools::brent_find_minima([&](double d) { return -rate(d); }, a, b, 50);
  return {r.first, -r.second};
}

Backaction effective_resonance(const BackactionModel& m) {
  validate(m);
  auto h = [&](double w) { return backaction(m, w).omega_eff_sq - w * w; };
  // Scan for sign changes of Ω_eff(ω)² − ω² and take the root nearest Ω0.
  const double hi = 4.0 * m.omega0 + 2.0 * std::abs(m.detuning);
  const int steps = 4000;
  double best = std::numeric_limits<double>::quiet_NaN();
  double prev_w = 0.0, prev_h = h(0.0);
  for (int i = 1; i <= steps; ++i) {
    const double w = hi * i / steps;
    const double hv = h(w);
    if ((prev_h > 0.0) != (hv > 0.0)) {
      boost::uintmax_t iters = 200;
      const auto tol = boost::math::tools::eps_tolerance<double>(50);
      const auto root = boost::math::tools::toms748_solve(h, prev_w, w, prev_h, hv, tol, iters);
      const double r = 0.5 * (root.first + root.second);
      if (std::isnan(best) || std::abs(r - m.omega0) < std::abs(best - m.omega0)) best = r;
    }
    prev_w = w;
    prev_h = hv;
  }
  if (std::isnan(best)) throw NumericalError("no mechanical resonance found");
  Backaction b = backaction(m, best);
  return b;
}

std::vector<double> linear_grid(double lo, double hi, std::size_t points) {
  if (points < 2 || !(hi > lo)) throw DomainError("grid needs hi > lo and at least 2 points");
  std::vector<double> g(points);
  for (std::size_t i = 0; i < points; ++i)
    g[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(points - 1);
  return g;
}

SpectrumModel displacement_spectrum(const BackactionModel& m, const std::vector<double>& omega) {
  validate(m);
  SpectrumModel s;
  s.kind = SpectrumKind::displacement;
  s.omega = omega;
  s.values.reserve(omega.size());
  for (double w : omega) s.values.push_back(thermal_psd(m, w));
  return s;
}

SpectrumModel heterodyne_spectrum(const BackactionModel& m, double alpha_c, double zeta_c,
                                  const std::vector<double>& omega) {
  validate(m);
  SpectrumModel s;
  s.kind = SpectrumKind::heterodyne;
  s.omega = omega;
  s.values.reserve(omega.size());
  for (double w : omega) s.values.push_back(heterodyne_psd(m, alpha_c, zeta_c, w));
  return s;
}

TheoryFitBand resolve_band(const BackactionModel& m, const TheoryFitBand& band) {
  TheoryFitBand b = band;
  if (b.lo <= 0.0) b.lo = 0.06 * m.omega0;
  if (b.hi <= 0.0) b.hi = 3.6 * m.omega0;
  return b;
}

TheoryTemperature teff_theory(const BackactionModel& m, const TheoryFitBand& band_in) {
  validate(m);
  const TheoryFitBand band = resolve_band(m, band_in);
  const Backaction res = effective_resonance(m);

  const SpectrumModel s = displacement_spectrum(m, linear_grid(band.lo, band.hi, band.points));
  LineshapeGuess guess{0.0, res.omega_eff, std::max(res.gamma_eff, m.gamma_m)};
  const double peak = thermal_psd(m, res.omega_eff);
  guess.amplitude = peak * guess.resonance * guess.resonance * guess.linewidth;
  const LineshapeFit fit = fit_lineshape(s.omega, s.values, guess);
  if (!fit.converged) throw NumericalError("lineshape fit to the theory spectrum failed: " + fit.message);

  // Piecewise adaptive Gauss-Kronrod with breakpoints around the resonance and the cavity sidebands.
  const double upper = m.omega0 + 50.0 * m.kappa;
  const double wr = res.omega_eff;
  const double gw = std::max(std::abs(res.gamma_eff), m.gamma_m);
  std::vector<double> pts{0.0, upper};
  for (double f : {-20.0, -5.0, -1.0, 0.0, 1.0, 5.0, 20.0}) pts.push_back(wr + f * gw);
  for (double f : {-1.0, 0.0, 1.0}) pts.push_back(std::abs(m.detuning) + f * m.kappa);
  for (double f : {2.0, 5.0, 20.0}) pts.push_back(f * m.omega0);
  std::erase_if(pts, [&](double p) { return p < 0.0 || p > upper; });
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());

  auto f = [&](double w) { return thermal_psd(m, w); };
  double total = 0.0, total_err = 0.0;
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    double err = 0.0;
    total += boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, pts[i], pts[i + 1], 20,
                                                                           1e-10, &err);
    total_err += err;
  }
  if (!(total > 0.0) || total_err > 1e-6 * total) {
    std::ostringstream os;
    os << "temperature quadrature did not converge: integral=" << total << " error=" << total_err
       << " over " << pts.size() - 1 << " panels";
    throw NumericalError(os.str());
  }

  TheoryTemperature t;
  t.omega_fit = fit.resonance;
  t.gamma_fit = fit.linewidth;
  t.variance = total / pi;
  t.temperature = m.mass * t.omega_fit * t.omega_fit * t.variance / PhysicalConstants::kB;
  return t;
}

}  // namespace levcav
