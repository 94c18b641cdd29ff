#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "levcav/analysis.hpp"
#include "levcav/gas.hpp"
#include "levcav/params.hpp"
#include "levcav/trap.hpp"
#include "levcav/welch.hpp"

namespace levcav {

/// Schema violation; `field` is the dotted path of the offending key.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string field, const std::string& what)
      : std::runtime_error(field.empty() ? what : field + ": " + what), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

struct PressureRange {
  double lo = 0.0;  // Pa
  double hi = 0.0;  // Pa
  std::size_t points = 0;
  bool log_spacing = true;
};

struct DriveConfig {
  double x0 = 0.0;  // m from cavity center
  double mu = 0.0;
  TrapDrive trap;
  std::optional<double> omega0;   // rad/s, overrides the trap-derived Ω0(μ)
  std::optional<double> coupling; // rad/s, overrides g0 √n_c
  std::optional<double> gamma_m;  // rad/s, overrides the gas model
  double detuning = 0.0;          // rad/s
  double bath_temperature = 293.0;
};

struct SweepConfig {
  std::vector<double> detunings;  // rad/s
  std::vector<double> mus;
  std::vector<std::uint64_t> seeds;
  double reference_detuning = 0.0;  // rad/s, calibration run for simulate
  bool reference_run = true;
};

struct SimulationConfig {
  double duration = 0.5;  // s
  double dt = 0.0;        // s, 0 = default
  std::size_t decimation = 8;
  WelchOptions welch;
  double theta = 1.5707963267948966;
  double detection_noise = 0.0;
  bool write_time_series = false;
};

struct AnalysisConfig {
  double window_lo = 0.0;  // rad/s
  double window_hi = 0.0;
  FrequencyBand fit_band;
  double reference_temperature = 293.0;
  FitWeighting weighting = FitWeighting::uniform;
  bool through_transfer = false;
  std::vector<std::string> reference_files;   // matched to spectra by μ
  std::vector<std::string> background_files;  // one shared, or matched by μ
  std::vector<std::string> spectra_files;
  std::string spectra_dir;
};

struct PositionConfig {
  std::string points_file;
  std::optional<double> particle_pixel;
  double pixel_offset = 0.0;  // per-camera offset added to every pixel
};

struct RunConfig {
  ParticleSpec particle;
  CavitySpec cavity;
  GasSpec gas;
  std::optional<PressureRange> pressure_range;
  std::vector<double> inverse_gamma0;  // rad/s, inverse lookups for the gas command
  DriveConfig drive;
  SweepConfig sweep;
  SimulationConfig simulation;
  AnalysisConfig analysis;
  PositionConfig position;
  std::string output_dir;
  std::string base_dir;        // directory relative paths resolve against
  std::string canonical_json;  // sorted, compact form of the input document
  std::string hash;            // SHA-256 of canonical_json
};

RunConfig parse_config(const std::string& text, const std::string& base_dir = ".");
RunConfig load_config(const std::string& path);

/// Resolves a path from the config relative to its directory.
std::string resolve_path(const RunConfig& c, const std::string& p);

}  // namespace levcav
