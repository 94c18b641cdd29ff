#include "levcav/analysis.hpp"

#include <algorithm>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <limits>
#include <sstream>

#include "levcav/constants.hpp"
#include "levcav/dynamics.hpp"
#include "levcav/errors.hpp"
#include "levcav/lsq.hpp"
#include "levcav/trap.hpp"

namespace levcav {

void validate(const MeasuredSpectrum& s) {
  if (s.freq_hz.size() != s.values.size())
    throw DomainError("spectrum: frequency and value columns differ in length");
  if (s.freq_hz.size() < 3) throw DomainError("spectrum: fewer than 3 bins");
  for (std::size_t i = 0; i < s.freq_hz.size(); ++i) {
    if (!std::isfinite(s.freq_hz[i]) || !std::isfinite(s.values[i]))
      throw DomainError("spectrum: non-finite entry at bin " + std::to_string(i));
    if (i > 0 && !(s.freq_hz[i] > s.freq_hz[i - 1]))
      throw DomainError("spectrum: frequency grid not increasing at bin " + std::to_string(i));
  }
}

MeasuredSpectrum to_measured(const PowerSpectrum& ps, SpectrumMeta meta) {
  return MeasuredSpectrum{ps.freq_hz, ps.psd, std::move(meta)};
}

SubtractedSpectrum background_subtract(const MeasuredSpectrum& signal,
                                       const MeasuredSpectrum& background) {
  validate(signal);
  validate(background);
  if (signal.freq_hz.size() != background.freq_hz.size())
    throw DomainError("background_subtract: grids differ in length");
  for (std::size_t i = 0; i < signal.freq_hz.size(); ++i) {
    const double a = signal.freq_hz[i], b = background.freq_hz[i];
    if (std::abs(a - b) > 1e-12 * std::max(std::abs(a), std::abs(b)))
      throw DomainError("background_subtract: grids differ at bin " + std::to_string(i));
  }
  SubtractedSpectrum out;
  out.spectrum = signal;
  out.unclipped.resize(signal.values.size());
  for (std::size_t i = 0; i < signal.values.size(); ++i) {
    const double d = signal.values[i] - background.values[i];
    out.unclipped[i] = d;
    if (d < 0.0) ++out.clipped;
    out.spectrum.values[i] = std::max(d, 0.0);
  }
  return out;
}

namespace {

std::pair<double, double> cavity_meta(const MeasuredSpectrum& s) {
  if (!s.meta.kappa || !s.meta.detuning)
    throw DomainError("spectrum '" + s.meta.label + "' lacks kappa/detuning metadata");
  return {*s.meta.kappa, *s.meta.detuning};
}

MeasuredSpectrum scale_by_transfer(const MeasuredSpectrum& s, bool divide) {
  validate(s);
  const auto [kappa, detuning] = cavity_meta(s);
  MeasuredSpectrum out = s;
  for (std::size_t i = 0; i < s.values.size(); ++i) {
    const double h = heterodyne_transfer(kappa, detuning, angular(s.freq_hz[i]));
    out.values[i] = divide ? s.values[i] / h : s.values[i] * h;
  }
  return out;
}

// Indices [first, last) of the band on the grid.
std::pair<std::size_t, std::size_t> band_range(const MeasuredSpectrum& s, const FrequencyBand& b) {
  const double hi = b.hi_hz > 0.0 ? b.hi_hz : std::numeric_limits<double>::infinity();
  if (!(hi > b.lo_hz)) throw DomainError("frequency band is empty");
  const auto first = std::lower_bound(s.freq_hz.begin(), s.freq_hz.end(), b.lo_hz);
  const auto last = std::upper_bound(first, s.freq_hz.end(), hi);
  if (last - first < 5) throw DomainError("frequency band holds fewer than 5 bins");
  return {static_cast<std::size_t>(first - s.freq_hz.begin()),
          static_cast<std::size_t>(last - s.freq_hz.begin())};
}

}  // namespace

MeasuredSpectrum deconvolve(const MeasuredSpectrum& s) { return scale_by_transfer(s, true); }

MeasuredSpectrum apply_transfer(const MeasuredSpectrum& s) { return scale_by_transfer(s, false); }

OscFit fit_oscillator(const MeasuredSpectrum& s, const OscFitOptions& opt) {
  validate(s);
  const auto [first, last] = band_range(s, opt.band);
  std::vector<double> w, v;
  for (std::size_t i = first; i < last; ++i) {
    w.push_back(angular(s.freq_hz[i]));
    v.push_back(s.values[i]);
  }
  std::vector<double> sorted = v;
  std::nth_element(sorted.begin(), sorted.begin() + sorted.size() / 2, sorted.end());
  const double median = sorted[sorted.size() / 2];
  const double peak = *std::max_element(v.begin(), v.end());
  if (!(peak > 0.0) || peak < 3.0 * median) {
    std::ostringstream os;
    os << "no resonance in '" << s.meta.label << "': peak/median = " << peak / median;
    throw DomainError(os.str());
  }
  const LineshapeGuess guess = opt.guess ? *opt.guess : guess_lineshape(w, v);
  const LineshapeFit f = fit_lineshape(w, v, guess, opt.weighting);

  OscFit out;
  out.product = f.amplitude;
  out.omega_eff = std::abs(f.resonance);
  out.gamma_eff = std::abs(f.linewidth);
  out.covariance = f.covariance;
  out.residual_norm = f.residual_norm;
  out.iterations = f.iterations;
  out.converged = f.converged && f.amplitude > 0.0;
  out.message = f.message;
  if (opt.calibration) {
    if (!(*opt.calibration > 0.0)) throw DomainError("calibration constant must be positive");
    out.teff_star = f.amplitude / *opt.calibration;
    out.teff_sigma = std::sqrt(f.covariance(0, 0)) / *opt.calibration;
  }
  return out;
}

double band_integral(const MeasuredSpectrum& s, const FrequencyBand& band, Quadrature rule) {
  validate(s);
  const auto [first, last] = band_range(s, band);
  double sum = 0.0;
  for (std::size_t i = first; i + 1 < last; ++i) {
    const double dw = angular(s.freq_hz[i + 1] - s.freq_hz[i]);
    sum += rule == Quadrature::trapezoid ? 0.5 * (s.values[i] + s.values[i + 1]) * dw
                                         : s.values[i] * dw;
  }
  return sum;
}

Calibration calibrate(const MeasuredSpectrum& reference, double t_ref, const OscFitOptions& opt,
                      Quadrature rule) {
  if (!(t_ref > 0.0)) throw DomainError("reference temperature must be positive");
  const auto [kappa, detuning] = cavity_meta(reference);
  if (std::abs(detuning) > kappa / 100.0) {
    std::ostringstream os;
    os << "reference '" << reference.meta.label << "' detuning " << in_hz(detuning)
       << " Hz exceeds kappa/100";
    throw DomainError(os.str());
  }
  OscFitOptions o = opt;
  o.calibration.reset();
  const OscFit fit = fit_oscillator(reference, o);
  if (!fit.converged) throw NumericalError("reference fit did not converge: " + fit.message);
  Calibration cal;
  cal.a = fit.product / t_ref;
  cal.a_I = t_ref / (fit.omega_eff * fit.omega_eff * band_integral(reference, opt.band, rule));
  cal.reference_temperature = t_ref;
  cal.reference_omega = fit.omega_eff;
  cal.reference_label = reference.meta.label;
  cal.band = opt.band;
  return cal;
}

IntegratedTemperature integrate_temperature(const MeasuredSpectrum& s, double omega_eff,
                                            const Calibration& cal, const OscFit* model,
                                            Quadrature rule) {
  if (!(cal.a_I > 0.0)) throw DomainError("integrate_temperature: uncalibrated a_I");
  IntegratedTemperature out;
  out.temperature = cal.a_I * omega_eff * omega_eff * band_integral(s, cal.band, rule);
  if (model && model->product > 0.0) {
    const auto [first, last] = band_range(s, cal.band);
    const double lo = angular(s.freq_hz[first]), hi = angular(s.freq_hz[last - 1]);
    const double total = model->product * pi / (2.0 * model->omega_eff * model->omega_eff);
    auto f = [&](double w) {
      return oscillator_lineshape(w, model->product, model->omega_eff, model->gamma_eff);
    };
    using GK = boost::math::quadrature::gauss_kronrod<double, 61>;
    const double om = model->omega_eff, gw = model->gamma_eff;
    std::vector<double> cuts{lo, hi};
    for (double c : {om - 5.0 * gw, om - gw, om, om + gw, om + 5.0 * gw})
      if (c > lo && c < hi) cuts.push_back(c);
    std::sort(cuts.begin(), cuts.end());
    double inside = 0.0;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i)
      inside += GK::integrate(f, cuts[i], cuts[i + 1], 12, 1e-12);
    out.tail_fraction = std::max(0.0, 1.0 - inside / total);
    if (out.tail_fraction > 0.01) {
      std::ostringstream os;
      os << "band truncation drops " << 100.0 * out.tail_fraction << "% of the fitted area";
      out.warning = os.str();
    }
  }
  return out;
}

double theory_fitted_omega(double coupling, double omega0, double detuning,
                           const SweepFitOptions& o) {
  BackactionModel m;
  m.omega0 = omega0;
  m.gamma_m = o.gamma_m;
  m.kappa = o.kappa;
  m.detuning = detuning;
  m.coupling = coupling;
  m.mass = o.mass;
  const TheoryFitBand band = resolve_band(m, {o.band_lo, o.band_hi, o.points});
  const auto grid = linear_grid(band.lo, band.hi, band.points);
  std::vector<double> s = displacement_spectrum(m, grid).values;
  if (o.through_transfer) {
    for (std::size_t i = 0; i < s.size(); ++i) s[i] *= heterodyne_transfer(o.kappa, detuning, grid[i]);
    for (std::size_t i = 0; i < s.size(); ++i) s[i] /= heterodyne_transfer(o.kappa, detuning, grid[i]);
  }
  const LineshapeFit f = fit_lineshape(grid, s, guess_lineshape(grid, s), o.weighting);
  if (!f.converged) throw NumericalError("theory spectrum fit failed: " + f.message);
  return std::abs(f.resonance);
}

SweepFit fit_detuning_sweep(const std::vector<SweepPoint>& pts, const SweepFitOptions& o) {
  if (pts.size() < 4) throw DomainError("sweep fit needs at least 4 points");
  if (!(o.kappa > 0.0) || !(o.gamma_m > 0.0))
    throw DomainError("sweep fit needs positive kappa and gamma_m");
  const auto [lo, hi] = std::minmax_element(pts.begin(), pts.end(), [](auto& a, auto& b) {
    return a.detuning < b.detuning;
  });
  if (hi->detuning - lo->detuning < o.kappa / 2.0)
    throw DomainError("sweep must span at least kappa/2 in detuning");

  const double k = o.kappa;
  const auto n = static_cast<Eigen::Index>(pts.size());
  // Parameters in units of κ: (g, Ω0, δΔ).
  ResidualFn residuals = [&](const Eigen::VectorXd& p) {
    Eigen::VectorXd r(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const SweepPoint& sp = pts[static_cast<std::size_t>(i)];
      const double scale = sp.sigma > 0.0 ? sp.sigma : k;
      try {
        const double w = theory_fitted_omega(k * p[0], k * p[1], sp.detuning + k * p[2], o);
        r[i] = (w - sp.omega_eff) / scale;
      } catch (const std::runtime_error&) {
        r[i] = 1e3;  // unstable or unfittable candidate
      } catch (const std::domain_error&) {
        r[i] = 1e3;
      }
    }
    return r;
  };

  Eigen::VectorXd start(3);
  if (o.start) {
    start = *o.start / k;
  } else {
    double mean = 0.0;
    for (const auto& sp : pts) mean += sp.omega_eff;
    mean /= static_cast<double>(pts.size());
    double best = std::numeric_limits<double>::infinity();
    for (double g : {0.05, 0.15, 0.3, 0.45, 0.6})
      for (double d : {-0.1, 0.0, 0.1}) {
        Eigen::VectorXd p(3);
        p << g, mean / k, d;
        const double c = residuals(p).squaredNorm();
        if (c < best) {
          best = c;
          start = p;
        }
      }
  }

  LsqOptions lo_opt;
  lo_opt.max_iterations = o.max_iterations;
  lo_opt.fd_relative_step = 1e-5;
  lo_opt.typical_scale = Eigen::VectorXd::Constant(3, 0.1);
  const LsqResult r = levenberg_marquardt(residuals, start, lo_opt);

  if (r.jacobian.size() > 0 && r.jacobian.cwiseAbs().maxCoeff() == 0.0)
    throw NumericalError("sweep fit residual does not depend on (g, Omega0, dDelta)");

  SweepFit out;
  out.coupling = k * std::abs(r.params[0]);
  out.omega0 = k * r.params[1];
  out.delta_offset = k * r.params[2];
  out.covariance = k * k * r.covariance.topLeftCorner<3, 3>();
  out.residual_norm = r.residual_norm;
  out.condition_number = r.condition_number;
  out.converged = r.converged;
  const bool conditioned = std::isfinite(r.condition_number) && r.condition_number < 1e8;
  // The coupling must be resolved at 3 sigma; otherwise δΔ is unconstrained.
  const bool resolved = 3.0 * std::sqrt(std::max(out.covariance(0, 0), 0.0)) < out.coupling;
  out.identifiable = conditioned && resolved;
  std::ostringstream os;
  os << r.message << "; jacobian condition " << r.condition_number;
  if (!conditioned) os << " (parameters not identifiable)";
  if (!resolved) os << " (coupling not resolved: " << std::sqrt(std::max(out.covariance(0, 0), 0.0)) << " rad/s uncertainty)";
  if (std::abs(out.delta_offset) >= k) os << "; |dDelta| exceeds kappa";
  out.message = os.str();
  return out;
}

WindowAverage window_average_temperature(const std::vector<std::pair<double, double>>& sweep,
                                         double lo, double hi) {
  std::vector<double> in;
  for (const auto& [d, t] : sweep)
    if (d >= lo && d <= hi) in.push_back(t);
  if (in.empty()) throw DomainError("no sweep points inside the averaging window");
  if (in.size() < 2) throw DomainError("averaging window needs at least 2 points");
  WindowAverage w;
  w.count = in.size();
  for (double t : in) w.mean += t;
  w.mean /= static_cast<double>(in.size());
  double ss = 0.0;
  for (double t : in) ss += (t - w.mean) * (t - w.mean);
  w.stddev = std::sqrt(ss / static_cast<double>(in.size() - 1));
  return w;
}

double coupling_per_root_polarizability(const CavitySpec& c, double x0, double mu,
                                        double omega0_mu) {
  const DerivedCavity d = derive_cavity(c);
  const double u_per_xi =
      d.laser_frequency / (2.0 * PhysicalConstants::eps0 * mode_volume(c)) /
      (1.0 + x0 * x0 / (d.rayleigh_length * d.rayleigh_length));
  const double phi = phase_shift(x0 + c.length / 2.0, c.length);
  const double xbar = equilibrium_displacement(mu, phi, d.wavenumber);
  const double a = std::sqrt(1.0 + mu * mu + 2.0 * mu * std::cos(2.0 * phi));
  return std::sqrt(u_per_xi * mu * omega0_mu / 2.0) *
         std::abs(std::sin(2.0 * d.wavenumber * xbar)) / std::sqrt(a);
}

CouplingTable coupling_vs_mu(const std::vector<MuSweep>& sweeps, const CavitySpec& c,
                             double dielectric_const) {
  if (sweeps.empty()) throw DomainError("coupling_vs_mu: no sweeps");
  const double x0 = sweeps.front().x0;
  for (const auto& s : sweeps)
    if (std::abs(s.x0 - x0) > 1e-9) throw DomainError("coupling_vs_mu: inconsistent x0 across sweeps");

  CouplingTable t;
  std::vector<double> h;
  double shh = 0.0, sgh = 0.0;
  bool weighted = true;
  for (const auto& s : sweeps) weighted = weighted && s.fit.covariance(0, 0) > 0.0;
  for (const auto& s : sweeps) {
    CouplingRow row;
    row.mu = s.mu;
    row.coupling = s.fit.coupling;
    row.sigma = std::sqrt(std::max(s.fit.covariance(0, 0), 0.0));
    const double hi = coupling_per_root_polarizability(c, x0, s.mu, s.fit.omega0);
    const double w = weighted ? 1.0 / (row.sigma * row.sigma) : 1.0;
    shh += w * hi * hi;
    sgh += w * row.coupling * hi;
    h.push_back(hi);
    t.rows.push_back(row);
  }
  if (!(shh > 0.0)) throw DomainError("coupling_vs_mu: all sweeps at mu = 0");
  const double root = sgh / shh;
  double rss = 0.0;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    t.rows[i].theory = root * h[i];
    const double d = t.rows[i].coupling - t.rows[i].theory;
    rss += weighted ? d * d / (t.rows[i].sigma * t.rows[i].sigma) : d * d;
  }
  const double dof = static_cast<double>(std::max<std::size_t>(t.rows.size(), 2) - 1);
  const double root_sigma = weighted ? std::sqrt(1.0 / shh) : std::sqrt(rss / dof / shh);
  t.polarizability = root * root;
  t.polarizability_sigma = 2.0 * std::abs(root) * root_sigma;
  t.radius = radius_from_polarizability(t.polarizability, dielectric_const);
  t.residual_norm = std::sqrt(rss);
  return t;
}

}  // namespace levcav
