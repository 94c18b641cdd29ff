#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>

#include "levcav/config.hpp"
#include "levcav/dynamics.hpp"
#include "levcav/trap.hpp"

namespace levcav {

struct CommandOptions {
  std::string out_dir;  // overrides output.directory
  bool overwrite = false;
  unsigned jobs = 1;
  std::optional<std::uint64_t> seed;  // replaces sweep.seeds
};

/// Trap solution and backaction model for one (μ, Δ) point of a config.
struct PointModel {
  TrapState trap;
  BackactionModel model;
};

PointModel point_model(const RunConfig& c, double mu, double detuning);

// Each command writes into the output directory and finishes with manifest.json.
// Errors propagate as ConfigError / DomainError / NumericalError / InstabilityError.
void cmd_derive(const RunConfig& c, const CommandOptions& o, std::ostream& log);
void cmd_sweep(const RunConfig& c, const CommandOptions& o, std::ostream& log);
void cmd_simulate(const RunConfig& c, const CommandOptions& o, std::ostream& log);
void cmd_analyze(const RunConfig& c, const CommandOptions& o, std::ostream& log);
void cmd_gas(const RunConfig& c, const CommandOptions& o, std::ostream& log);
void cmd_calibrate_position(const RunConfig& c, const CommandOptions& o, std::ostream& log);

/// Loads the config, dispatches `command`, maps failures to exit codes
/// (0 ok, 2 config/input error, 3 numerical failure) with a JSON error object on `err`.
int run_command(const std::string& command, const std::string& config_path,
                const CommandOptions& o, std::ostream& log, std::ostream& err);

}  // namespace levcav
