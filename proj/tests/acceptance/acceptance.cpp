// Acceptance checks: one PASS/FAIL line per criterion, nonzero exit if any fails.
#include <sys/wait.h>

#include <boost/random/mersenne_twister.hpp>
#include <boost/random/uniform_real_distribution.hpp>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "levcav/analysis.hpp"
#include "levcav/constants.hpp"
#include "levcav/dynamics.hpp"
#include "levcav/gas.hpp"
#include "levcav/params.hpp"
#include "levcav/position.hpp"
#include "levcav/sim.hpp"
#include "levcav/trap.hpp"
#include "levcav/welch.hpp"

using namespace levcav;
namespace fs = std::filesystem;

namespace {

const ParticleSpec particle{169e-9, 1950.0, 2.1};
const CavitySpec cavity{10.97e-3, 76000.0, 1064e-9, 41e-6};
const double x0 = -1.565e-3;
const double band_lo_hz = 10e3, band_hi_hz = 600e3;

int failures = 0;

void report(int id, bool pass, const std::string& name, const std::string& detail) {
  std::printf("%s criterion %2d  %-34s %s\n", pass ? "PASS" : "FAIL", id, name.c_str(), detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

std::string fmt(const char* f, double a, double b = 0, double c = 0, double d = 0, double e = 0) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, a, b, c, d, e);
  return buf;
}

bool within(double v, double ref, double rel) { return std::abs(v - ref) <= rel * std::abs(ref); }

BackactionModel nominal_model(double detuning) {
  BackactionModel m;
  m.omega0 = angular(165e3);
  m.gamma_m = angular(7.2e3);
  m.kappa = angular(180e3);
  m.detuning = detuning;
  m.coupling = angular(66e3);
  m.mass = particle_mass(particle);
  m.bath_temperature = 293.0;
  return m;
}

// simulate -> heterodyne -> Welch -> deconvolve
struct PipelineRun {
  MeasuredSpectrum spectrum;
  std::size_t segments = 0;
  OscFit fit;
};

PipelineRun pipeline(double detuning, std::uint64_t seed) {
  const BackactionModel m = nominal_model(detuning);
  SimConfig sc;
  sc.seed = seed;
  sc.duration = 0.5;
  const TimeSeries ts = simulate(sc, m);
  HeterodyneReadout ro;
  ro.kappa = m.kappa;
  ro.zeta_c = ts.field_coupling;
  ro.alpha_c = 1.0;
  const std::vector<double> s = synth_heterodyne(ts, ro);
  const PowerSpectrum ps = welch_psd(s, 1.0 / ts.dt);
  SpectrumMeta meta;
  meta.detuning = detuning;
  meta.kappa = m.kappa;
  meta.mu = 0.4;
  PipelineRun r;
  r.spectrum = deconvolve(to_measured(ps, meta));
  r.segments = ps.segments;
  OscFitOptions o;
  o.band = {band_lo_hz, band_hi_hz};
  r.fit = fit_oscillator(r.spectrum, o);
  return r;
}

std::map<double, PipelineRun> cache;

const PipelineRun& sweep_run(double detuning_khz) {
  auto it = cache.find(detuning_khz);
  if (it == cache.end())
    it = cache.emplace(detuning_khz, pipeline(angular(detuning_khz * 1e3), 1000 + static_cast<std::uint64_t>(detuning_khz + 100))).first;
  return it->second;
}

void criterion_1() {
  const DerivedCavity d = derive_cavity(cavity);
  const bool ok = within(d.fsr, 13.67e9, 1e-3) && within(in_hz(d.kappa), 180e3, 0.01);
  report(1, ok, "cavity parameter chain", fmt("FSR=%.4f GHz kappa/2pi=%.2f kHz", d.fsr / 1e9, in_hz(d.kappa) / 1e3));
}

void criterion_2() {
  const double w = waist_at(cavity, cavity.length / 2.0);
  report(2, within(w, 61e-6, 0.02), "waist at the mirror", fmt("W(mirror)=%.2f um", w * 1e6));
}

void criterion_3() {
  const double u0 = in_hz(u0_at(particle, cavity, x0));
  report(3, within(u0, 145e3, 0.05), "single-photon shift U0(x0)", fmt("U0/2pi=%.2f kHz", u0 / 1e3));
}

void criterion_4() {
  const TrapState s = solve_trap(particle, cavity, x0, 1e-9, {TrapDrive::Kind::bare_frequency, angular(165e3)});
  const double g0 = in_hz(std::abs(s.g0.control));
  const bool ok = within(std::abs(s.xbar), 77e-9, 0.05) && within(g0, 1.2, 0.15);
  report(4, ok, "displacement and g0 at mu->0", fmt("xbar=%.2f nm g0/2pi=%.3f Hz", std::abs(s.xbar) * 1e9, g0));
}

void criterion_5() {
  const BackactionModel m = nominal_model(0.0);
  const auto t0 = std::chrono::steady_clock::now();
  const CoolingPeak p = max_cooling_rate(m, 0.0, 3.0 * m.kappa + 2.0 * m.omega0);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const double r = in_hz(p.rate);
  report(5, r >= 39e3 && r <= 59e3 && secs < 1.0, "maximum cooling rate",
         fmt("max(gamma_eff-gamma_m)/2pi=%.2f kHz at Delta/2pi=%.1f kHz (%.3f s)", r / 1e3, in_hz(p.detuning) / 1e3, secs));
}

void criterion_6() {
  std::vector<std::pair<double, double>> sweep;
  for (double d = 100.0; d <= 150.0 + 1e-9; d += 5.0)
    sweep.emplace_back(angular(d * 1e3), teff_theory(nominal_model(angular(d * 1e3))).temperature);
  const WindowAverage w = window_average_temperature(sweep, angular(100e3), angular(150e3));
  const bool band = w.mean >= 35.0 && w.mean <= 64.0;
  const bool one_sided = w.mean >= 35.0 && w.mean <= 69.0;
  std::string detail = fmt("T=%.1f K (std %.1f K, n=%.0f); ", w.mean, w.stddev, static_cast<double>(w.count));
  detail += std::string("one-sided <=69 K ") + (one_sided ? "met" : "missed");
  detail += std::string("; nominal [35,64] K ") + (band ? "met" : "missed");
  report(6, one_sided, "windowed theory temperature", detail);
}

void criterion_7() {
  bool ok = true;
  std::string detail;
  for (double d : {25.0, 75.0, 125.0, 175.0}) {
    const auto t0 = std::chrono::steady_clock::now();
    const PipelineRun& r = sweep_run(d);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    TheoryFitBand band{angular(band_lo_hz), angular(band_hi_hz), 1500};
    const TheoryTemperature t = teff_theory(nominal_model(angular(d * 1e3)), band);
    const double dw = r.fit.omega_eff / t.omega_fit - 1.0, dg = r.fit.gamma_eff / t.gamma_fit - 1.0;
    const bool pass = r.segments >= 200 && std::abs(dw) <= 0.02 && std::abs(dg) <= 0.05 && secs < 300.0;
    ok = ok && pass;
    detail += fmt("[%.0f kHz: dOmega=%+.2f%% dgamma=%+.2f%% K=%.0f %.1fs] ", d, 100 * dw, 100 * dg,
                  static_cast<double>(r.segments), secs);
  }
  report(7, ok, "pipeline closure", detail);
}

void criterion_8() {
  const PipelineRun ref = pipeline(angular(1e3), 4242);
  const PipelineRun run = pipeline(0.0, 4243);
  OscFitOptions o;
  o.band = {band_lo_hz, band_hi_hz};
  const Calibration cal = calibrate(ref.spectrum, 293.0, o);
  o.calibration = cal.a;
  const OscFit f = fit_oscillator(run.spectrum, o);
  const IntegratedTemperature ti = integrate_temperature(run.spectrum, f.omega_eff, cal, &f);
  const bool ok = within(f.teff_star, 293.0, 0.05) && within(ti.temperature, 293.0, 0.05) &&
                  within(f.teff_star, ti.temperature, 0.10);
  report(8, ok, "equipartition anchor",
         fmt("T_fit=%.1f K T_int=%.1f K (tail %.2f%%)", f.teff_star, ti.temperature, 100 * ti.tail_fraction));
}

void criterion_9() {
  SweepFitOptions o;
  o.kappa = angular(180e3);
  o.gamma_m = angular(7.2e3);
  o.band_lo = angular(band_lo_hz);
  o.band_hi = angular(band_hi_hz);
  bool ok = true;
  std::string detail;
  struct Truth { double g, w0, dd; };
  for (const Truth t : {Truth{66e3, 165e3, 5e3}, Truth{40e3, 150e3, -8e3}, Truth{90e3, 190e3, 3e3}}) {
    std::vector<SweepPoint> pts;
    for (double d = 0; d <= 250; d += 25) {
      const double set = angular(d * 1e3);
      pts.push_back({set, theory_fitted_omega(angular(t.g), angular(t.w0), set + angular(t.dd), o), 0.0});
    }
    const SweepFit f = fit_detuning_sweep(pts, o);
    const bool pass = within(in_hz(f.coupling), t.g, 0.02) && within(in_hz(f.omega0), t.w0, 0.02) &&
                      within(in_hz(f.delta_offset), t.dd, 0.02);
    ok = ok && pass;
    detail += fmt("[g=%.2f W0=%.2f dD=%.3f kHz] ", in_hz(f.coupling) / 1e3, in_hz(f.omega0) / 1e3,
                  in_hz(f.delta_offset) / 1e3);
  }
  // Simulated sweep at mu = 0.4 through the full pipeline.
  std::vector<SweepPoint> sim;
  for (double d = 0; d <= 250; d += 25) {
    const PipelineRun& r = sweep_run(d);
    sim.push_back({angular(d * 1e3), r.fit.omega_eff, r.fit.omega_sigma()});
  }
  const SweepFit f = fit_detuning_sweep(sim, o);
  const bool pass = within(in_hz(f.coupling), 66e3, 0.10);
  ok = ok && pass;
  detail += fmt("simulated mu=0.4: g=%.2f kHz W0=%.2f kHz dD=%.2f kHz", in_hz(f.coupling) / 1e3,
                in_hz(f.omega0) / 1e3, in_hz(f.delta_offset) / 1e3);
  report(9, ok, "sweep-fit identifiability", detail);
}

double gas_oracle(double pressure, double radius, double density) {
  const double kb = 1.380649e-23, eta = 1.81e-5, temp = 293.0, d = 0.372e-9;
  const double mass = 4.0 / 3.0 * M_PI * radius * radius * radius * density;
  const double lfp = kb * temp / (std::sqrt(2.0) * M_PI * d * d * pressure);
  const double kn = lfp / radius;
  const double ck = 0.31 * kn / (0.785 + 1.152 * kn + kn * kn);
  return 6.0 * M_PI * eta * radius / mass * 0.619 / (0.619 + kn) * (1.0 + ck);
}

void criterion_10() {
  boost::random::mt19937_64 rng(2024);
  boost::random::uniform_real_distribution<double> lp(-1.0, 5.0), lr(50e-9, 500e-9);
  double worst = 0.0;
  for (int i = 0; i < 10; ++i) {
    GasSpec g;
    g.pressure = std::pow(10.0, lp(rng));
    const ParticleSpec p{lr(rng), 1950.0, 2.1};
    const double ref = gas_oracle(g.pressure, p.radius, p.density);
    worst = std::max(worst, std::abs(gas_damping(g, p) / ref - 1.0));
  }
  GasSpec dense;
  dense.pressure = 1e12;
  const double stokes = std::abs(gas_damping(dense, particle) / stokes_damping(dense, particle) - 1.0);
  GasSpec thin;
  thin.pressure = 1e-3;
  const ParticleSpec big{2.0 * particle.radius, particle.density, particle.dielectric_const};
  const double scaling = std::abs(gas_damping(thin, particle) / gas_damping(thin, big) / 2.0 - 1.0);
  const bool ok = worst <= 1e-9 && stokes <= 1e-6 && scaling <= 1e-6;
  report(10, ok, "gas damping model",
         fmt("oracle max rel err=%.2e; Stokes limit dev=%.2e; 1/r dev=%.2e", worst, stokes, scaling));
}

void criterion_11() {
  const double xr = derive_cavity(cavity).rayleigh_length;
  CameraScale truth;
  truth.zeta_c = 512.0;
  truth.scale = 6.5e-6;
  truth.omega_c = angular(190e3);
  truth.rayleigh_length = xr;
  std::mt19937_64 rng(11);
  std::normal_distribution<double> n(0.0, 1.0);
  std::vector<CalibPoint> pts;
  for (double px = 0; px <= 1100; px += 50) {
    const double w = camera_model(truth, px);
    pts.push_back({px, w * (1.0 + 0.01 * n(rng)), 0.01 * w});
  }
  const CameraScale f = fit_camera_scale(pts, xr);
  const double ratio = 1.0 / std::sqrt(1.0 + x0 * x0 / (xr * xr));
  const double model_ratio = camera_model(truth, truth.zeta_c + x0 / truth.scale) / truth.omega_c;
  const bool ok = within(f.zeta_c, truth.zeta_c, 0.05) && within(f.scale, truth.scale, 0.05) &&
                  within(f.omega_c, truth.omega_c, 0.05) && within(model_ratio, 0.953, 0.01) &&
                  within(ratio, model_ratio, 1e-12);
  report(11, ok, "position calibration",
         fmt("zeta_c=%.2f px xi=%.4f um/px Omega_c/2pi=%.2f kHz ratio=%.4f", f.zeta_c, f.scale * 1e6,
             in_hz(f.omega_c) / 1e3, model_ratio));
}

std::map<std::string, std::string> tree(const fs::path& dir) {
  std::map<std::string, std::string> m;
  for (const auto& e : fs::recursive_directory_iterator(dir))
    if (e.is_regular_file()) {
      std::ifstream in(e.path(), std::ios::binary);
      m[fs::relative(e.path(), dir).string()] = {std::istreambuf_iterator<char>(in), {}};
    }
  return m;
}

void criterion_12() {
  const fs::path root = fs::temp_directory_path() / "levcav_acceptance";
  fs::remove_all(root);
  fs::create_directories(root);
  const fs::path cfg = root / "config.json";
  std::ofstream(cfg) << R"({
  "particle": {"radius_nm": 169, "density_kg_m3": 1950, "dielectric_const": 2.1},
  "cavity": {"length_mm": 10.97, "finesse": 76000, "wavelength_nm": 1064, "waist_um": 41},
  "gas": {"pressure_mbar": 4, "range_mbar": [0.1, 1000], "points": 40},
  "drive": {"position_mm": -1.565, "mu": 0.4, "trap_omega0_khz": 183, "omega0_khz": 165,
            "coupling_khz": 66, "gamma_m_khz": 7.2, "detuning_khz": 125},
  "sweep": {"detuning_khz": [0, 125], "mu": [0.4], "seeds": [7]},
  "simulation": {"duration_s": 0.02, "segment_length": 1024, "write_time_series": true}
})";
  bool ok = true;
  std::size_t files = 0;
  for (const char* cmd : {"derive", "sweep", "simulate", "gas"}) {
    std::map<std::string, std::string> runs[2];
    for (int k = 0; k < 2; ++k) {
      const fs::path out = root / (std::string(cmd) + std::to_string(k));
      const std::string line = std::string(LEVCAV_CLI_PATH) + " " + cmd + " --config " + cfg.string() +
                               " --out " + out.string() + " --seed 7 --jobs " + (k ? "2" : "1") +
                               " >/dev/null 2>&1";
      const int st = std::system(line.c_str());
      ok = ok && WIFEXITED(st) && WEXITSTATUS(st) == 0;
      if (fs::exists(out)) runs[k] = tree(out);
    }
    ok = ok && !runs[0].empty() && runs[0] == runs[1];
    files += runs[0].size();
  }
  fs::remove_all(root);
  report(12, ok, "determinism", fmt("%.0f files compared byte for byte across reruns", static_cast<double>(files)));
}

}  // namespace

int main() {
  const std::vector<std::function<void()>> all = {criterion_1, criterion_2, criterion_3, criterion_4,
                                                  criterion_5, criterion_6, criterion_7, criterion_8,
                                                  criterion_9, criterion_10, criterion_11, criterion_12};
  for (std::size_t i = 0; i < all.size(); ++i) {
    try {
      all[i]();
    } catch (const std::exception& e) {
      report(static_cast<int>(i + 1), false, "exception", e.what());
    }
  }
  std::printf("%d of %zu criteria failed\n", failures, all.size());
  return failures == 0 ? 0 : 1;
}
