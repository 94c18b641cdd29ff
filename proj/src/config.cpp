#include "levcav/config.hpp"

#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <set>
#include <sstream>

#include "levcav/constants.hpp"
#include "levcav/manifest.hpp"

namespace levcav {

namespace {

using nlohmann::json;

// Reads keys from one JSON object and rejects any it never consumed.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_, "expected an object");
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  const json& raw(const std::string& key) {
    if (!has(key)) throw ConfigError(field(key), "required key missing");
    used_.insert(key);
    return j_.at(key);
  }

  double number(const std::string& key) {
    const json& v = raw(key);
    if (!v.is_number()) throw ConfigError(field(key), "expected a number");
    return v.get<double>();
  }
  double number(const std::string& key, double fallback) { return has(key) ? number(key) : fallback; }

  double positive(const std::string& key) {
    const double v = number(key);
    if (!(v > 0.0)) throw ConfigError(field(key), "must be positive");
    return v;
  }
  double positive(const std::string& key, double fallback) { return has(key) ? positive(key) : fallback; }

  std::size_t count(const std::string& key, std::size_t fallback) {
    if (!has(key)) return fallback;
    const json& v = raw(key);
    if (!v.is_number_integer() || v.get<long long>() < 1)
      throw ConfigError(field(key), "expected a positive integer");
    return v.get<std::size_t>();
  }

  bool boolean(const std::string& key, bool fallback) {
    if (!has(key)) return fallback;
    const json& v = raw(key);
    if (!v.is_boolean()) throw ConfigError(field(key), "expected true or false");
    return v.get<bool>();
  }

  std::string text(const std::string& key, const std::string& fallback = {}) {
    if (!has(key)) return fallback;
    const json& v = raw(key);
    if (!v.is_string()) throw ConfigError(field(key), "expected a string");
    return v.get<std::string>();
  }

  std::vector<double> numbers(const std::string& key) {
    const json& v = raw(key);
    if (!v.is_array()) throw ConfigError(field(key), "expected an array of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_number()) throw ConfigError(field(key) + "[" + std::to_string(i) + "]", "expected a number");
      out.push_back(v[i].get<double>());
    }
    return out;
  }

  std::pair<double, double> interval(const std::string& key) {
    const auto v = numbers(key);
    if (v.size() != 2 || !(v[1] > v[0]))
      throw ConfigError(field(key), "expected [lo, hi] with hi > lo");
    return {v[0], v[1]};
  }

  // A single path under `one` or an array under `many`.
  std::vector<std::string> paths(const std::string& one, const std::string& many) {
    std::vector<std::string> out;
    if (!one.empty() && has(one)) out.push_back(text(one));
    if (has(many)) {
      const json& v = raw(many);
      if (!v.is_array()) throw ConfigError(field(many), "expected an array of paths");
      for (const auto& e : v) {
        if (!e.is_string()) throw ConfigError(field(many), "expected strings");
        out.push_back(e.get<std::string>());
      }
    }
    return out;
  }

  Section child(const std::string& key) { return Section(raw(key), field(key)); }

  std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!used_.count(it.key())) throw ConfigError(field(it.key()), "unknown key");
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> used_;
};

constexpr double mbar = 100.0;  // Pa

void read_particle(Section s, ParticleSpec& p) {
  p.radius = s.positive("radius_nm") * 1e-9;
  p.density = s.positive("density_kg_m3");
  p.dielectric_const = s.number("dielectric_const");
  if (!(p.dielectric_const > 1.0)) throw ConfigError(s.field("dielectric_const"), "must exceed 1");
  s.finish();
}

void read_cavity(Section s, CavitySpec& c) {
  c.length = s.positive("length_mm") * 1e-3;
  c.finesse = s.positive("finesse");
  c.wavelength = s.positive("wavelength_nm") * 1e-9;
  c.waist_center = s.positive("waist_um") * 1e-6;
  s.finish();
}

void read_gas(Section s, RunConfig& rc) {
  GasSpec& g = rc.gas;
  g.pressure = s.number("pressure_mbar", 0.0) * mbar;
  if (g.pressure < 0.0) throw ConfigError(s.field("pressure_mbar"), "must be non-negative");
  g.temperature = s.positive("temperature_k", g.temperature);
  g.viscosity = s.positive("viscosity_pa_s", g.viscosity);
  g.molecule_diameter = s.positive("molecule_diameter_nm", g.molecule_diameter * 1e9) * 1e-9;
  if (s.has("range_mbar")) {
    PressureRange r;
    const auto [lo, hi] = s.interval("range_mbar");
    if (!(lo > 0.0)) throw ConfigError(s.field("range_mbar"), "lower bound must be positive");
    r.lo = lo * mbar;
    r.hi = hi * mbar;
    r.points = s.count("points", 200);
    r.log_spacing = s.boolean("log_spacing", true);
    rc.pressure_range = r;
  }
  if (s.has("inverse_gamma0_khz"))
    for (double v : s.numbers("inverse_gamma0_khz")) rc.inverse_gamma0.push_back(angular(v * 1e3));
  s.finish();
}

void read_drive(Section s, DriveConfig& d) {
  d.x0 = s.number("position_mm") * 1e-3;
  d.mu = s.number("mu", 0.0);
  if (d.mu < 0.0) throw ConfigError(s.field("mu"), "must be non-negative");
  int given = 0;
  if (s.has("trap_omega0_khz")) {
    d.trap = {TrapDrive::Kind::bare_frequency, angular(s.positive("trap_omega0_khz") * 1e3)};
    ++given;
  }
  if (s.has("trap_power_w")) {
    d.trap = {TrapDrive::Kind::power, s.positive("trap_power_w")};
    ++given;
  }
  if (s.has("trap_photons")) {
    d.trap = {TrapDrive::Kind::photons, s.positive("trap_photons")};
    ++given;
  }
  if (given != 1)
    throw ConfigError(s.field("trap_*"),
                      "give exactly one of trap_omega0_khz, trap_power_w, trap_photons");
  if (s.has("omega0_khz")) d.omega0 = angular(s.positive("omega0_khz") * 1e3);
  if (s.has("coupling_khz")) d.coupling = angular(s.number("coupling_khz") * 1e3);
  if (s.has("gamma_m_khz")) d.gamma_m = angular(s.positive("gamma_m_khz") * 1e3);
  d.detuning = angular(s.number("detuning_khz", 0.0) * 1e3);
  d.bath_temperature = s.positive("bath_temperature_k", 293.0);
  s.finish();
}

void read_sweep(Section s, SweepConfig& w) {
  if (s.has("detuning_khz")) {
    const json& v = s.raw("detuning_khz");
    if (v.is_array()) {
      for (double d : s.numbers("detuning_khz")) w.detunings.push_back(angular(d * 1e3));
    } else {
      Section r(v, s.field("detuning_khz"));
      const double start = r.number("start"), stop = r.number("stop"), step = r.positive("step");
      r.finish();
      if (stop < start) throw ConfigError(s.field("detuning_khz.stop"), "must be >= start");
      const auto n = static_cast<std::size_t>(std::floor((stop - start) / step + 1e-9)) + 1;
      for (std::size_t i = 0; i < n; ++i)
        w.detunings.push_back(angular((start + step * static_cast<double>(i)) * 1e3));
    }
  }
  if (s.has("mu")) {
    w.mus = s.numbers("mu");
    for (double m : w.mus)
      if (m < 0.0) throw ConfigError(s.field("mu"), "values must be non-negative");
  }
  if (s.has("seeds")) {
    const json& v = s.raw("seeds");
    if (!v.is_array()) throw ConfigError(s.field("seeds"), "expected an array of integers");
    for (const auto& e : v) {
      if (!e.is_number_unsigned()) throw ConfigError(s.field("seeds"), "seeds must be non-negative integers");
      w.seeds.push_back(e.get<std::uint64_t>());
    }
  }
  w.reference_detuning = angular(s.number("reference_detuning_khz", 1.0) * 1e3);
  w.reference_run = s.boolean("reference_run", true);
  s.finish();
}

void read_simulation(Section s, SimulationConfig& c) {
  c.duration = s.positive("duration_s", c.duration);
  c.dt = s.has("dt_s") ? s.positive("dt_s") : 0.0;
  c.decimation = s.count("decimation", c.decimation);
  c.welch.segment_length = s.count("segment_length", c.welch.segment_length);
  c.welch.overlap = s.number("overlap", c.welch.overlap);
  if (!(c.welch.overlap >= 0.0 && c.welch.overlap < 1.0))
    throw ConfigError(s.field("overlap"), "must lie in [0, 1)");
  const std::string win = s.text("window", "hann");
  if (win == "hann") c.welch.window = Window::hann;
  else if (win == "rectangular") c.welch.window = Window::rectangular;
  else throw ConfigError(s.field("window"), "expected \"hann\" or \"rectangular\"");
  c.theta = s.number("theta_rad", c.theta);
  c.detection_noise = s.number("detection_noise", 0.0);
  if (c.detection_noise < 0.0) throw ConfigError(s.field("detection_noise"), "must be non-negative");
  c.write_time_series = s.boolean("write_time_series", false);
  s.finish();
}

void read_analysis(Section s, AnalysisConfig& a) {
  const auto [wlo, whi] = s.has("window_khz") ? s.interval("window_khz") : std::pair{100.0, 150.0};
  a.window_lo = angular(wlo * 1e3);
  a.window_hi = angular(whi * 1e3);
  if (s.has("fit_band_khz")) {
    const auto [lo, hi] = s.interval("fit_band_khz");
    a.fit_band = {lo * 1e3, hi * 1e3};
  }
  a.reference_temperature = s.positive("reference_temperature_k", 293.0);
  const std::string w = s.text("weighting", "uniform");
  if (w == "uniform") a.weighting = FitWeighting::uniform;
  else if (w == "relative") a.weighting = FitWeighting::relative;
  else throw ConfigError(s.field("weighting"), "expected \"uniform\" or \"relative\"");
  a.through_transfer = s.boolean("through_transfer", false);
  a.reference_files = s.paths("reference_file", "reference_files");
  a.background_files = s.paths("background_file", "background_files");
  a.spectra_files = s.paths("", "spectra_files");
  a.spectra_dir = s.text("spectra_dir");
  s.finish();
}

void read_position(Section s, PositionConfig& p) {
  p.points_file = s.text("points_file");
  if (s.has("particle_pixel")) p.particle_pixel = s.number("particle_pixel");
  p.pixel_offset = s.number("pixel_offset", 0.0);
  s.finish();
}

}  // namespace

RunConfig parse_config(const std::string& text, const std::string& base_dir) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("", std::string("invalid JSON: ") + e.what());
  }
  RunConfig rc;
  rc.base_dir = base_dir;
  rc.canonical_json = doc.dump();
  rc.hash = sha256_hex(rc.canonical_json);
  Section root(doc, "");
  read_particle(root.child("particle"), rc.particle);
  read_cavity(root.child("cavity"), rc.cavity);
  if (root.has("gas")) read_gas(root.child("gas"), rc);
  if (!root.has("drive")) throw ConfigError("drive", "missing section");
  read_drive(root.child("drive"), rc.drive);
  if (std::abs(rc.drive.x0) >= rc.cavity.length / 2.0)
    throw ConfigError("drive.position_mm", "particle must lie inside the cavity");
  if (root.has("sweep")) read_sweep(root.child("sweep"), rc.sweep);
  if (root.has("simulation")) read_simulation(root.child("simulation"), rc.simulation);
  rc.analysis.window_lo = angular(100e3);
  rc.analysis.window_hi = angular(150e3);
  if (root.has("analysis")) read_analysis(root.child("analysis"), rc.analysis);
  if (root.has("position")) read_position(root.child("position"), rc.position);
  if (root.has("output")) {
    Section o = root.child("output");
    rc.output_dir = o.text("directory");
    o.finish();
  }
  root.finish();
  return rc;
}

RunConfig load_config(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ConfigError("--config", "cannot open '" + path + "'");
  std::ostringstream ss;
  ss << f.rdbuf();
  const auto dir = std::filesystem::path(path).parent_path();
  return parse_config(ss.str(), dir.empty() ? "." : dir.string());
}

std::string resolve_path(const RunConfig& c, const std::string& p) {
  const std::filesystem::path q(p);
  return q.is_absolute() ? p : (std::filesystem::path(c.base_dir) / q).string();
}

}  // namespace levcav
