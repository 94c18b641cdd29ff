#include "levcav/commands.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <json.hpp>
#include <map>
#include <ostream>
#include <thread>

#include "levcav/analysis.hpp"
#include "levcav/constants.hpp"
#include "levcav/csv.hpp"
#include "levcav/errors.hpp"
#include "levcav/gas.hpp"
#include "levcav/manifest.hpp"
#include "levcav/position.hpp"
#include "levcav/sim.hpp"
#include "levcav/welch.hpp"

namespace levcav {

namespace {

using ojson = nlohmann::ordered_json;

// Runs f(0..n-1) on up to `jobs` threads; results keep index order.
template <class R, class F>
std::vector<R> parallel_map(std::size_t n, unsigned jobs, F f) {
  std::vector<R> out(n);
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        out[i] = f(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const unsigned threads = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(n)));
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

std::string fixed(double v, const char* fmt) {
  char buf[64];
  std::snprintf(buf, sizeof buf, fmt, v);
  return buf;
}

std::string tag(double mu, double detuning) {
  return "mu" + fixed(mu, "%.3f") + "_d" + fixed(in_hz(detuning) / 1e3, "%+.3f") + "khz";
}

std::string output_dir(const RunConfig& c, const CommandOptions& o) {
  if (!o.out_dir.empty()) return o.out_dir;
  if (!c.output_dir.empty()) return resolve_path(c, c.output_dir);
  return "levcav_out";
}

std::vector<double> sweep_mus(const RunConfig& c) {
  return c.sweep.mus.empty() ? std::vector<double>{c.drive.mu} : c.sweep.mus;
}

std::vector<std::uint64_t> sweep_seeds(const RunConfig& c, const CommandOptions& o) {
  if (o.seed) return {*o.seed};
  return c.sweep.seeds.empty() ? std::vector<std::uint64_t>{1} : c.sweep.seeds;
}

const std::vector<double>& require_detunings(const RunConfig& c) {
  if (c.sweep.detunings.empty()) throw ConfigError("sweep.detuning_khz", "required for this command");
  return c.sweep.detunings;
}

std::string dump(const ojson& j) { return j.dump(2) + "\n"; }

double hz(double w) { return in_hz(w); }

}  // namespace

PointModel point_model(const RunConfig& c, double mu, double detuning) {
  PointModel p;
  p.trap = solve_trap(c.particle, c.cavity, c.drive.x0, mu, c.drive.trap);
  BackactionModel& m = p.model;
  m.omega0 = p.trap.omega0;
  m.coupling = p.trap.coupling();
  if (c.drive.omega0 || c.drive.coupling) {
    // Overrides hold at drive.mu; other μ follow the trap-geometry ratios.
    const TrapState ref = solve_trap(c.particle, c.cavity, c.drive.x0, c.drive.mu, c.drive.trap);
    if (c.drive.omega0) m.omega0 = *c.drive.omega0 * p.trap.omega0 / ref.omega0;
    if (c.drive.coupling) {
      const double base = ref.coupling();
      m.coupling = base > 0.0 ? *c.drive.coupling * p.trap.coupling() / base : *c.drive.coupling;
    }
  }
  m.gamma_m = c.drive.gamma_m ? *c.drive.gamma_m : gas_damping(c.gas, c.particle);
  if (!(m.gamma_m > 0.0))
    throw ConfigError("gas.pressure_mbar",
                      "mechanical damping is zero; set a pressure or drive.gamma_m_khz");
  m.kappa = derive_cavity(c.cavity).kappa;
  m.detuning = detuning;
  m.bath_temperature = c.drive.bath_temperature;
  m.mass = p.trap.mass;
  return p;
}

void cmd_derive(const RunConfig& c, const CommandOptions& o, std::ostream& log) {
  OutputSink sink(output_dir(c, o), o.overwrite);
  sink.check_available("derive.json");
  sink.check_available("manifest.json");

  const DerivedCavity dc = derive_cavity(c.cavity);
  const PointModel pm = point_model(c, c.drive.mu, c.drive.detuning);
  const TrapState& t = pm.trap;
  const BackactionModel& m = pm.model;

  ojson j;
  j["config_sha256"] = c.hash;
  j["particle"] = {{"radius_m", c.particle.radius},
                   {"mass_kg", particle_mass(c.particle)},
                   {"polarizability_c_m2_per_v", polarizability(c.particle)},
                   {"rayleigh_regime", !outside_rayleigh_regime(c.particle, c.cavity.wavelength)}};
  j["cavity"] = {{"fsr_hz", dc.fsr},
                 {"kappa_hz", hz(dc.kappa)},
                 {"rayleigh_length_m", dc.rayleigh_length},
                 {"waist_center_m", c.cavity.waist_center},
                 {"waist_mirror_m", waist_at(c.cavity, c.cavity.length / 2.0)},
                 {"mode_volume_m3", mode_volume(c.cavity)}};
  j["position"] = {{"x0_m", t.x0}, {"x0_prime_m", t.x0_prime}, {"phi_rad", t.phi},
                   {"u0_hz", hz(t.u0)}};
  j["trap"] = {{"mu", t.mu},
               {"xbar_m", t.xbar},
               {"omega0_bare_hz", hz(t.omega0_bare)},
               {"omega0_hz", hz(t.omega0)},
               {"trap_photons", t.trap_photons},
               {"control_photons", t.control_photons},
               {"ground_state_extension_m", t.xgs},
               {"g0_hz", hz(t.g0.control)},
               {"g0_trap_hz", hz(t.g0.trap)},
               {"coupling_hz", hz(t.coupling())}};
  GasSpec g = c.gas;
  j["gas"] = {{"pressure_pa", g.pressure},
              {"knudsen", g.pressure > 0.0 ? knudsen_number(g, c.particle) : 0.0},
              {"gamma0_hz", hz(gas_damping(g, c.particle))}};

  const CoolingPeak peak = max_cooling_rate(m, 0.0, 3.0 * m.kappa + 2.0 * m.omega0);
  const SidebandRates sr = sideband_rates(m.coupling, m.kappa, m.detuning, m.omega0);
  ojson dyn = {{"omega0_hz", hz(m.omega0)},
               {"coupling_hz", hz(m.coupling)},
               {"gamma_m_hz", hz(m.gamma_m)},
               {"detuning_hz", hz(m.detuning)},
               {"gamma_max_hz", hz(peak.rate)},
               {"gamma_max_detuning_hz", hz(peak.detuning)},
               {"stokes_rate_hz", hz(sr.stokes)},
               {"anti_stokes_rate_hz", hz(sr.anti_stokes)},
               {"cooling_rate_hz", hz(sr.cooling)}};
  try {
    const Backaction b = backaction(m, m.omega0);
    const TheoryTemperature tt = teff_theory(m);
    dyn["gamma_eff_hz"] = hz(b.gamma_eff);
    dyn["omega_eff_hz"] = hz(b.omega_eff);
    dyn["parametric_instability"] = b.parametric_instability;
    dyn["teff_k"] = tt.temperature;
  } catch (const InstabilityError& e) {
    dyn["instability"] = e.what();
  }
  j["dynamics"] = dyn;

  if (!c.sweep.mus.empty()) {
    ojson rows = ojson::array();
    for (double mu : c.sweep.mus) {
      const PointModel p = point_model(c, mu, c.drive.detuning);
      rows.push_back({{"mu", mu},
                      {"xbar_m", p.trap.xbar},
                      {"omega0_hz", hz(p.model.omega0)},
                      {"g0_hz", hz(p.trap.g0.control)},
                      {"coupling_hz", hz(p.model.coupling)}});
    }
    j["per_mu"] = rows;
  }

  sink.write("derive.json", dump(j));
  write_manifest(sink, {"derive", c.hash, {}, {}});
  log << "derive: wrote " << (sink.directory() / "derive.json").string() << "\n";
}

void cmd_sweep(const RunConfig& c, const CommandOptions& o, std::ostream& log) {
  const auto& detunings = require_detunings(c);
  const auto mus = sweep_mus(c);
  OutputSink sink(output_dir(c, o), o.overwrite);

  struct Row {
    double mu = 0, detuning = 0;
    bool stable = false;
    std::string failure;
    double omega_eff = NAN, gamma_eff = NAN, omega_fit = NAN, gamma_fit = NAN, teff = NAN;
    double cooling = NAN;
    std::string spectrum;
  };
  std::vector<std::pair<double, double>> points;
  for (double mu : mus)
    for (double d : detunings) points.emplace_back(mu, d);
  for (const auto& [mu, d] : points) sink.check_available("spectra/" + tag(mu, d) + ".csv");
  sink.check_available("sweep_summary.csv");

  const auto rows = parallel_map<Row>(points.size(), o.jobs, [&](std::size_t i) {
    Row r;
    r.mu = points[i].first;
    r.detuning = points[i].second;
    const BackactionModel m = point_model(c, r.mu, r.detuning).model;
    r.cooling = sideband_rates(m.coupling, m.kappa, m.detuning, m.omega0).cooling;
    try {
      const Backaction res = effective_resonance(m);
      const TheoryTemperature tt = teff_theory(m);
      r.omega_eff = res.omega_eff;
      r.gamma_eff = res.gamma_eff;
      r.omega_fit = tt.omega_fit;
      r.gamma_fit = tt.gamma_fit;
      r.teff = tt.temperature;
      r.stable = !res.parametric_instability;
      const TheoryFitBand band = resolve_band(m, {});
      const SpectrumModel s = displacement_spectrum(m, linear_grid(band.lo, band.hi, 2000));
      MeasuredSpectrum ms;
      for (std::size_t k = 0; k < s.omega.size(); ++k) {
        ms.freq_hz.push_back(hz(s.omega[k]));
        ms.values.push_back(4.0 * pi * s.values[k]);  // one-sided per Hz
      }
      ms.meta = {m.detuning, m.kappa, r.mu, c.gas.pressure, "theory " + tag(r.mu, r.detuning)};
      CsvTable t = spectrum_table(ms);
      t.meta.emplace_back("config_sha256", c.hash);
      r.spectrum = render_csv(t);
    } catch (const InstabilityError& e) {
      r.failure = e.what();
    }
    return r;
  });

  CsvTable summary;
  summary.meta.emplace_back("config_sha256", c.hash);
  summary.meta.emplace_back("units", "Hz (angular rates divided by 2 pi); teff_k in K");
  summary.columns = {"mu", "detuning_hz", "omega_eff_hz", "gamma_eff_hz", "omega_fit_hz",
                     "gamma_fit_hz", "teff_k", "cooling_rate_hz", "stable"};
  summary.data.assign(summary.columns.size(), {});
  std::vector<std::string> failures;
  for (const Row& r : rows) {
    const double vals[] = {r.mu, hz(r.detuning), hz(r.omega_eff), hz(r.gamma_eff), hz(r.omega_fit),
                           hz(r.gamma_fit), r.teff, hz(r.cooling), r.stable ? 1.0 : 0.0};
    for (std::size_t k = 0; k < summary.columns.size(); ++k) summary.data[k].push_back(vals[k]);
    if (!r.failure.empty()) failures.push_back(tag(r.mu, r.detuning) + ": " + r.failure);
    else sink.write("spectra/" + tag(r.mu, r.detuning) + ".csv", r.spectrum);
  }
  for (double mu : mus) {
    const BackactionModel m = point_model(c, mu, 0.0).model;
    if (m.coupling > 0.0) {
      const CoolingPeak p = max_cooling_rate(m, 0.0, 3.0 * m.kappa + 2.0 * m.omega0);
      summary.meta.emplace_back("gamma_max_hz[mu=" + fixed(mu, "%.3f") + "]", format_number(hz(p.rate)));
    }
  }
  sink.write("sweep_summary.csv", render_csv(summary));
  write_manifest(sink, {"sweep", c.hash, {}, failures});
  log << "sweep: " << rows.size() << " points, " << failures.size() << " unstable\n";
}

namespace {

struct SimJob {
  double mu = 0, detuning = 0;
  std::uint64_t seed = 0;
  enum class Kind { signal, reference, background } kind = Kind::signal;
  std::string name() const {
    const std::string base = tag(mu, detuning) + "_s" + std::to_string(seed) + ".csv";
    switch (kind) {
      case Kind::reference: return "reference/" + base;
      case Kind::background: return "background/mu" + fixed(mu, "%.3f") + "_s" + std::to_string(seed) + ".csv";
      default: return "spectra/" + base;
    }
  }
};

struct SimResult {
  std::string spectrum;
  std::string series;
  std::string failure;
};

SimResult run_sim_job(const RunConfig& c, const SimJob& job) {
  SimResult out;
  const BackactionModel m = point_model(c, job.mu, job.detuning).model;
  SimConfig sc;
  sc.dt = c.simulation.dt;
  sc.duration = c.simulation.duration;
  sc.decimation = c.simulation.decimation;
  sc.seed = job.seed;

  TimeSeries ts;
  if (job.kind == SimJob::Kind::background) {
    const double dt = sc.dt > 0.0 ? sc.dt : default_time_step(m);
    const auto n = static_cast<std::size_t>(std::llround(sc.duration / (dt * sc.decimation)));
    ts.dt = dt * static_cast<double>(sc.decimation);
    ts.x.assign(n, 0.0);
    ts.response_re.assign(n, 0.0);
    ts.response_im.assign(n, 0.0);
    ts.kappa = m.kappa;
    ts.detuning = m.detuning;
    ts.seed = job.seed;
  } else {
    try {
      ts = simulate(sc, m);
    } catch (const InstabilityError& e) {
      out.failure = e.what();
      return out;
    }
  }
  HeterodyneReadout ro;
  ro.kappa = m.kappa;
  ro.zeta_c = job.kind == SimJob::Kind::background ? 0.0 : ts.field_coupling;
  ro.alpha_c = 1.0;
  ro.theta = c.simulation.theta;
  ro.detection_noise = c.simulation.detection_noise;
  ro.noise_seed = job.seed ^ 0x9e3779b97f4a7c15ULL;
  const std::vector<double> s = synth_heterodyne(ts, ro);
  const PowerSpectrum ps = welch_psd(s, 1.0 / ts.dt, c.simulation.welch);
  MeasuredSpectrum ms = to_measured(ps, {m.detuning, m.kappa, job.mu, c.gas.pressure, job.name()});
  CsvTable t = spectrum_table(ms);
  t.meta.emplace_back("seed", std::to_string(job.seed));
  t.meta.emplace_back("welch_segments", std::to_string(ps.segments));
  t.meta.emplace_back("config_sha256", c.hash);
  out.spectrum = render_csv(t);
  if (c.simulation.write_time_series && job.kind == SimJob::Kind::signal) {
    CsvTable st = time_series_table(ts, s);
    st.meta.emplace_back("config_sha256", c.hash);
    out.series = render_csv(st);
  }
  return out;
}

}  // namespace

void cmd_simulate(const RunConfig& c, const CommandOptions& o, std::ostream& log) {
  const auto& detunings = require_detunings(c);
  const auto mus = sweep_mus(c);
  const auto seeds = sweep_seeds(c, o);
  OutputSink sink(output_dir(c, o), o.overwrite);

  std::vector<SimJob> jobs;
  for (double mu : mus) {
    for (double d : detunings)
      for (auto s : seeds) jobs.push_back({mu, d, s, SimJob::Kind::signal});
    // Calibration and background runs use their own seed stream.
    const std::uint64_t aux = seeds.front() + 1000003ULL;
    if (c.sweep.reference_run)
      jobs.push_back({mu, c.sweep.reference_detuning, aux, SimJob::Kind::reference});
    jobs.push_back({mu, 0.0, aux, SimJob::Kind::background});
  }
  for (const auto& j : jobs) sink.check_available(j.name());
  sink.check_available("manifest.json");

  const auto results =
      parallel_map<SimResult>(jobs.size(), o.jobs, [&](std::size_t i) { return run_sim_job(c, jobs[i]); });

  std::vector<std::string> failures;
  std::vector<std::uint64_t> used = seeds;
  used.push_back(seeds.front() + 1000003ULL);
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    if (!results[i].failure.empty()) {
      failures.push_back(jobs[i].name() + ": " + results[i].failure);
      continue;
    }
    sink.write(jobs[i].name(), results[i].spectrum);
    if (!results[i].series.empty()) {
      std::string name = jobs[i].name();
      name.replace(0, name.find('/'), "series");
      sink.write(name, results[i].series);
    }
  }
  write_manifest(sink, {"simulate", c.hash, used, failures});
  log << "simulate: " << jobs.size() - failures.size() << " spectra, " << failures.size()
      << " diverged\n";
}

namespace {

std::vector<MeasuredSpectrum> load_spectra(const RunConfig& c, const std::vector<std::string>& files) {
  std::vector<MeasuredSpectrum> out;
  for (const auto& f : files) {
    const std::string p = resolve_path(c, f);
    out.push_back(spectrum_from_table(read_csv(p), p));
  }
  return out;
}

const MeasuredSpectrum& match_mu(const std::vector<MeasuredSpectrum>& pool, double mu,
                                 const std::string& what) {
  if (pool.size() == 1) return pool.front();
  for (const auto& s : pool)
    if (std::abs(s.meta.mu - mu) < 1e-9) return s;
  throw ConfigError("analysis." + what, "no " + what + " spectrum with mu = " + fixed(mu, "%.3f"));
}

ojson fit_json(const OscFit& f) {
  return {{"omega_eff_hz", hz(f.omega_eff)},
          {"omega_eff_sigma_hz", hz(f.omega_sigma())},
          {"gamma_eff_hz", hz(f.gamma_eff)},
          {"gamma_eff_sigma_hz", hz(f.gamma_sigma())},
          {"teff_star_k", f.teff_star},
          {"teff_star_sigma_k", f.teff_sigma},
          {"residual_norm", f.residual_norm},
          {"iterations", f.iterations},
          {"converged", f.converged},
          {"message", f.message}};
}

}  // namespace

void cmd_analyze(const RunConfig& c, const CommandOptions& o, std::ostream& log) {
  const AnalysisConfig& a = c.analysis;
  if (a.reference_files.empty())
    throw ConfigError("analysis.reference_file", "a reference spectrum is required for calibration");
  if (a.background_files.empty())
    throw ConfigError("analysis.background_file", "a background spectrum is required");
  std::vector<std::string> files = a.spectra_files;
  if (!a.spectra_dir.empty()) {
    const std::string dir = resolve_path(c, a.spectra_dir);
    if (!std::filesystem::is_directory(dir))
      throw ConfigError("analysis.spectra_dir", "'" + dir + "' is not a directory");
    std::vector<std::string> found;
    for (const auto& e : std::filesystem::directory_iterator(dir))
      if (e.path().extension() == ".csv") found.push_back(std::filesystem::absolute(e.path()).string());
    std::sort(found.begin(), found.end());
    files.insert(files.end(), found.begin(), found.end());
  }
  if (files.empty()) throw ConfigError("analysis.spectra_files", "no spectra to analyze");

  const auto references = load_spectra(c, a.reference_files);
  const auto backgrounds = load_spectra(c, a.background_files);
  auto spectra = load_spectra(c, files);
  std::stable_sort(spectra.begin(), spectra.end(), [](const auto& x, const auto& y) {
    return std::pair(x.meta.mu, x.meta.detuning.value_or(0.0)) <
           std::pair(y.meta.mu, y.meta.detuning.value_or(0.0));
  });

  OutputSink sink(output_dir(c, o), o.overwrite);
  for (const char* n : {"calibration.json", "fits.json", "fits.csv", "summary.csv", "manifest.json"})
    sink.check_available(n);

  OscFitOptions fo;
  fo.band = a.fit_band;
  fo.weighting = a.weighting;

  // Calibration per μ present among the spectra.
  std::map<double, Calibration> cals;
  std::map<double, MeasuredSpectrum> cleaned_refs;
  ojson cal_json = ojson::array();
  for (const auto& s : spectra) {
    if (cals.count(s.meta.mu)) continue;
    const MeasuredSpectrum& ref = match_mu(references, s.meta.mu, "reference");
    const MeasuredSpectrum& bg = match_mu(backgrounds, s.meta.mu, "background");
    const MeasuredSpectrum clean = deconvolve(background_subtract(ref, bg).spectrum);
    const Calibration cal = calibrate(clean, a.reference_temperature, fo);
    cals[s.meta.mu] = cal;
    cal_json.push_back({{"mu", s.meta.mu},
                        {"reference", ref.meta.label},
                        {"a", cal.a},
                        {"a_I", cal.a_I},
                        {"reference_temperature_k", cal.reference_temperature},
                        {"reference_omega_hz", hz(cal.reference_omega)}});
  }

  struct Analyzed {
    MeasuredSpectrum clean;
    OscFit fit;
    IntegratedTemperature ti;
    std::size_t clipped = 0;
    std::string failure;
  };
  const auto results = parallel_map<Analyzed>(spectra.size(), o.jobs, [&](std::size_t i) {
    Analyzed r;
    const MeasuredSpectrum& s = spectra[i];
    const SubtractedSpectrum sub = background_subtract(s, match_mu(backgrounds, s.meta.mu, "background"));
    r.clipped = sub.clipped;
    r.clean = deconvolve(sub.spectrum);
    const Calibration& cal = cals.at(s.meta.mu);
    OscFitOptions f = fo;
    f.calibration = cal.a;
    try {
      r.fit = fit_oscillator(r.clean, f);
      r.ti = integrate_temperature(r.clean, r.fit.omega_eff, cal, &r.fit);
      if (!r.fit.converged) r.failure = "fit did not converge: " + r.fit.message;
    } catch (const std::domain_error& e) {
      r.failure = e.what();
    } catch (const std::runtime_error& e) {
      r.failure = e.what();
    }
    return r;
  });

  ojson fits = ojson::array();
  CsvTable ft;
  ft.meta.emplace_back("config_sha256", c.hash);
  ft.columns = {"mu", "detuning_hz", "omega_eff_hz", "omega_eff_sigma_hz", "gamma_eff_hz",
                "gamma_eff_sigma_hz", "teff_star_k", "teff_int_k", "clipped_bins", "converged"};
  ft.data.assign(ft.columns.size(), {});
  std::vector<std::string> failures;
  std::map<double, std::vector<std::size_t>> by_mu;
  for (std::size_t i = 0; i < spectra.size(); ++i) {
    const auto& s = spectra[i];
    const auto& r = results[i];
    ojson e = {{"label", s.meta.label}, {"mu", s.meta.mu},
               {"detuning_hz", hz(s.meta.detuning.value_or(NAN))},
               {"clipped_bins", r.clipped}};
    if (!r.failure.empty()) {
      e["error"] = r.failure;
      failures.push_back(s.meta.label + ": " + r.failure);
    } else {
      e["fit"] = fit_json(r.fit);
      e["teff_int_k"] = r.ti.temperature;
      e["tail_fraction"] = r.ti.tail_fraction;
      if (r.ti.warning) e["warning"] = *r.ti.warning;
      by_mu[s.meta.mu].push_back(i);
      const double vals[] = {s.meta.mu, hz(*s.meta.detuning), hz(r.fit.omega_eff),
                             hz(r.fit.omega_sigma()), hz(r.fit.gamma_eff), hz(r.fit.gamma_sigma()),
                             r.fit.teff_star, r.ti.temperature, static_cast<double>(r.clipped),
                             r.fit.converged ? 1.0 : 0.0};
      for (std::size_t k = 0; k < ft.columns.size(); ++k) ft.data[k].push_back(vals[k]);
    }
    fits.push_back(e);
  }

  // Per-μ sweep fits, windowed temperatures and the coupling table.
  CsvTable sum;
  sum.meta.emplace_back("config_sha256", c.hash);
  sum.meta.emplace_back("window_hz", format_number(hz(a.window_lo)) + ":" + format_number(hz(a.window_hi)));
  sum.columns = {"mu", "coupling_hz", "coupling_sigma_hz", "coupling_theory_hz", "omega0_hz",
                 "delta_offset_hz", "window_mean_teff_k", "window_std_teff_k", "min_teff_k"};
  sum.data.assign(sum.columns.size(), {});
  std::vector<MuSweep> mu_sweeps;
  ojson sweeps = ojson::array();
  struct MuRow {
    double mu;
    std::optional<SweepFit> fit;
    WindowAverage win{NAN, NAN, 0};
    double tmin = NAN;
  };
  std::vector<MuRow> mrows;
  for (const auto& [mu, idx] : by_mu) {
    MuRow row{mu, std::nullopt, {NAN, NAN, 0}, NAN};
    std::vector<SweepPoint> pts;
    std::vector<std::pair<double, double>> temps;
    for (std::size_t i : idx) {
      const double d = *spectra[i].meta.detuning;
      pts.push_back({d, results[i].fit.omega_eff, results[i].fit.omega_sigma()});
      temps.emplace_back(d, results[i].ti.temperature);
      row.tmin = std::isnan(row.tmin) ? results[i].ti.temperature
                                      : std::min(row.tmin, results[i].ti.temperature);
    }
    ojson sj = {{"mu", mu}};
    try {
      row.win = window_average_temperature(temps, a.window_lo, a.window_hi);
      sj["window"] = {{"mean_k", row.win.mean}, {"std_k", row.win.stddev}, {"count", row.win.count}};
    } catch (const DomainError& e) {
      sj["window_error"] = e.what();
    }
    const MeasuredSpectrum& first = results[idx.front()].clean;
    SweepFitOptions so;
    so.kappa = *first.meta.kappa;
    so.gamma_m = point_model(c, mu, 0.0).model.gamma_m;
    so.weighting = a.weighting;
    so.through_transfer = a.through_transfer;
    so.band_lo = angular(a.fit_band.lo_hz > 0.0 ? a.fit_band.lo_hz : first.freq_hz.front());
    so.band_hi = angular(a.fit_band.hi_hz > 0.0 ? a.fit_band.hi_hz : first.freq_hz.back());
    if (so.band_lo <= 0.0) so.band_lo = angular(first.freq_hz[1]);
    try {
      const SweepFit f = fit_detuning_sweep(pts, so);
      row.fit = f;
      sj["sweep_fit"] = {{"coupling_hz", hz(f.coupling)},
                         {"coupling_sigma_hz", hz(std::sqrt(f.covariance(0, 0)))},
                         {"omega0_hz", hz(f.omega0)},
                         {"delta_offset_hz", hz(f.delta_offset)},
                         {"residual_norm", f.residual_norm},
                         {"condition_number", f.condition_number},
                         {"identifiable", f.identifiable},
                         {"converged", f.converged},
                         {"message", f.message}};
      if (mu > 0.0 && f.identifiable) mu_sweeps.push_back({mu, c.drive.x0, f});
    } catch (const std::exception& e) {
      sj["sweep_fit_error"] = e.what();
    }
    sweeps.push_back(sj);
    mrows.push_back(row);
  }

  ojson coupling;
  std::map<double, double> theory;
  if (!mu_sweeps.empty()) {
    try {
      const CouplingTable ct = coupling_vs_mu(mu_sweeps, c.cavity, c.particle.dielectric_const);
      coupling = {{"polarizability_c_m2_per_v", ct.polarizability},
                  {"polarizability_sigma", ct.polarizability_sigma},
                  {"radius_m", ct.radius},
                  {"residual_norm", ct.residual_norm}};
      for (const auto& r : ct.rows) theory[r.mu] = r.theory;
    } catch (const std::exception& e) {
      coupling = {{"error", e.what()}};
    }
  }
  for (const MuRow& r : mrows) {
    const double vals[] = {r.mu,
                           r.fit ? hz(r.fit->coupling) : NAN,
                           r.fit ? hz(std::sqrt(r.fit->covariance(0, 0))) : NAN,
                           theory.count(r.mu) ? hz(theory[r.mu]) : NAN,
                           r.fit ? hz(r.fit->omega0) : NAN,
                           r.fit ? hz(r.fit->delta_offset) : NAN,
                           r.win.mean, r.win.stddev, r.tmin};
    for (std::size_t k = 0; k < sum.columns.size(); ++k) sum.data[k].push_back(vals[k]);
  }

  sink.write("calibration.json", dump(cal_json));
  ojson report = {{"config_sha256", c.hash}, {"spectra", fits}, {"sweeps", sweeps}};
  if (!coupling.is_null()) report["coupling_vs_mu"] = coupling;
  sink.write("fits.json", dump(report));
  sink.write("fits.csv", render_csv(ft));
  sink.write("summary.csv", render_csv(sum));
  write_manifest(sink, {"analyze", c.hash, {}, failures});
  log << "analyze: " << spectra.size() << " spectra, " << failures.size() << " failed\n";
}

void cmd_gas(const RunConfig& c, const CommandOptions& o, std::ostream& log) {
  if (!c.pressure_range) throw ConfigError("gas.range_mbar", "required for this command");
  const PressureRange& r = *c.pressure_range;
  OutputSink sink(output_dir(c, o), o.overwrite);
  sink.check_available("gas_curve.csv");
  sink.check_available("gas_report.json");
  sink.check_available("manifest.json");

  CsvTable t;
  t.meta.emplace_back("config_sha256", c.hash);
  t.meta.emplace_back("stokes_limit_hz", format_number(hz(stokes_damping(c.gas, c.particle))));
  t.columns = {"pressure_mbar", "pressure_pa", "knudsen", "gamma0_rad_s", "gamma0_hz"};
  t.data.assign(t.columns.size(), {});
  for (std::size_t i = 0; i < r.points; ++i) {
    const double f = r.points > 1 ? static_cast<double>(i) / static_cast<double>(r.points - 1) : 0.0;
    GasSpec g = c.gas;
    g.pressure = r.log_spacing ? r.lo * std::pow(r.hi / r.lo, f) : r.lo + (r.hi - r.lo) * f;
    const double gamma = gas_damping(g, c.particle);
    const double vals[] = {g.pressure / 100.0, g.pressure, knudsen_number(g, c.particle), gamma, hz(gamma)};
    for (std::size_t k = 0; k < t.columns.size(); ++k) t.data[k].push_back(vals[k]);
  }
  ojson rep = {{"config_sha256", c.hash},
               {"stokes_limit_hz", hz(stokes_damping(c.gas, c.particle))},
               {"mean_free_path_at_1mbar_m", [&] {
                  GasSpec g = c.gas;
                  g.pressure = 100.0;
                  return mean_free_path(g);
                }()}};
  ojson inv = ojson::array();
  for (double target : c.inverse_gamma0) {
    ojson e = {{"gamma0_hz", hz(target)}};
    try {
      const double p = pressure_from_damping(c.gas, c.particle, target);
      e["pressure_pa"] = p;
      e["pressure_mbar"] = p / 100.0;
    } catch (const std::exception& ex) {
      e["error"] = ex.what();
    }
    inv.push_back(e);
  }
  rep["inverse"] = inv;
  sink.write("gas_curve.csv", render_csv(t));
  sink.write("gas_report.json", dump(rep));
  write_manifest(sink, {"gas", c.hash, {}, {}});
  log << "gas: " << r.points << " pressures\n";
}

void cmd_calibrate_position(const RunConfig& c, const CommandOptions& o, std::ostream& log) {
  if (c.position.points_file.empty()) throw ConfigError("position.points_file", "required for this command");
  const CsvTable in = read_csv(resolve_path(c, c.position.points_file));
  const auto& px = in.column("pixel");
  const auto& f = in.column("omega0_hz");
  std::vector<double> sig(px.size(), 0.0);
  if (std::find(in.columns.begin(), in.columns.end(), "sigma_hz") != in.columns.end())
    sig = in.column("sigma_hz");
  std::vector<CalibPoint> pts;
  for (std::size_t i = 0; i < px.size(); ++i)
    pts.push_back({px[i] + c.position.pixel_offset, angular(f[i]), angular(sig[i])});

  OutputSink sink(output_dir(c, o), o.overwrite);
  for (const char* n : {"camera_scale.json", "camera_residuals.csv", "manifest.json"}) sink.check_available(n);

  const double xr = derive_cavity(c.cavity).rayleigh_length;
  const CameraScale s = fit_camera_scale(pts, xr);
  ojson cov = ojson::array();
  const double unit[] = {1.0, 1.0, 1.0 / two_pi};  // (px, m/px, Hz)
  for (int i = 0; i < 3; ++i) {
    ojson row = ojson::array();
    for (int k = 0; k < 3; ++k) row.push_back(s.covariance(i, k) * unit[i] * unit[k]);
    cov.push_back(row);
  }
  ojson j = {{"config_sha256", c.hash},
             {"zeta_c_px", s.zeta_c},
             {"scale_m_per_px", s.scale},
             {"omega_c_hz", hz(s.omega_c)},
             {"rayleigh_length_m", s.rayleigh_length},
             {"covariance_px_mpx_hz", cov},
             {"residual_norm_hz", hz(s.residual_norm)},
             {"condition_number", s.condition_number},
             {"scale_sign_convention", "positive; camera orientation is not observable"}};
  if (c.position.particle_pixel) {
    const ParticlePosition p =
        position_from_pixel(s, *c.position.particle_pixel + c.position.pixel_offset, c.cavity.length);
    j["particle"] = {{"pixel", *c.position.particle_pixel},
                     {"x0_m", p.x0},
                     {"x0_prime_m", p.x0_prime},
                     {"sigma_m", p.sigma},
                     {"omega0_model_hz", hz(camera_model(s, *c.position.particle_pixel + c.position.pixel_offset))}};
  }
  CsvTable rt;
  rt.meta.emplace_back("config_sha256", c.hash);
  rt.columns = {"pixel", "omega0_hz", "model_hz", "residual_hz"};
  rt.data.assign(4, {});
  for (std::size_t i = 0; i < pts.size(); ++i) {
    rt.data[0].push_back(pts[i].pixel);
    rt.data[1].push_back(hz(pts[i].omega0));
    rt.data[2].push_back(hz(camera_model(s, pts[i].pixel)));
    rt.data[3].push_back(hz(s.residuals[i]));
  }
  sink.write("camera_scale.json", dump(j));
  sink.write("camera_residuals.csv", render_csv(rt));
  write_manifest(sink, {"calibrate-position", c.hash, {}, {}});
  log << "calibrate-position: zeta_c = " << s.zeta_c << " px, scale = " << s.scale << " m/px\n";
}

int run_command(const std::string& command, const std::string& config_path,
                const CommandOptions& o, std::ostream& log, std::ostream& err) {
  auto report = [&](const char* kind, const std::string& field, const std::string& msg, int code) {
    ojson e = {{"error", kind}, {"message", msg}};
    if (!field.empty()) e["field"] = field;
    err << e.dump() << "\n";
    return code;
  };
  try {
    const RunConfig c = load_config(config_path);
    if (command == "derive") cmd_derive(c, o, log);
    else if (command == "sweep") cmd_sweep(c, o, log);
    else if (command == "simulate") cmd_simulate(c, o, log);
    else if (command == "analyze") cmd_analyze(c, o, log);
    else if (command == "gas") cmd_gas(c, o, log);
    else if (command == "calibrate-position") cmd_calibrate_position(c, o, log);
    else return report("config", "command", "unknown command '" + command + "'", 2);
    return 0;
  } catch (const ConfigError& e) {
    return report("config", e.field(), e.what(), 2);
  } catch (const DomainError& e) {
    return report("input", "", e.what(), 2);
  } catch (const InstabilityError& e) {
    return report("instability", "", e.what(), 3);
  } catch (const NumericalError& e) {
    return report("numerical", "", e.what(), 3);
  } catch (const std::filesystem::filesystem_error& e) {
    return report("io", "", e.what(), 2);
  } catch (const std::exception& e) {
    return report("numerical", "", e.what(), 3);
  }
}

}  // namespace levcav
