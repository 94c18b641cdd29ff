#include <CLI11.hpp>
#include <iostream>

#include "levcav/commands.hpp"
#include "levcav/manifest.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Levitated-particle cavity optomechanics toolkit"};
  app.set_version_flag("--version", levcav::toolkit_version);
  app.require_subcommand(1);

  std::string config;
  levcav::CommandOptions opts;
  std::uint64_t seed = 0;

  const std::pair<const char*, const char*> commands[] = {
      {"derive", "Report cavity, trap and coupling parameters"},
      {"sweep", "Theory spectra and backaction summary over a detuning sweep"},
      {"simulate", "Langevin simulations and heterodyne noise power spectra"},
      {"analyze", "Calibrate, fit and summarize measured or simulated spectra"},
      {"gas", "Gas damping versus pressure and inverse lookups"},
      {"calibrate-position", "Camera pixel scale from trap frequency versus position"},
  };
  for (const auto& [name, help] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", config, "Run configuration (JSON)")->required();
    sub->add_option("--out", opts.out_dir, "Output directory");
    sub->add_option("--jobs", opts.jobs, "Worker threads")->check(CLI::PositiveNumber);
    sub->add_option("--seed", seed, "Single seed replacing sweep.seeds");
    sub->add_flag("--overwrite", opts.overwrite, "Replace existing outputs");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  CLI::App* chosen = app.get_subcommands().front();
  if (chosen->count("--seed")) opts.seed = seed;
  return levcav::run_command(chosen->get_name(), config, opts, std::cout, std::cerr);
}
