// soundlab command-line driver.
//
// Exit codes: 0 success, 1 usage or I/O error, 2 invalid configuration,
// 3 numerical failure.

#include <cstdint>
#include <exception>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "soundlab/soundlab.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

int run(soundlab::harness::Experiment experiment, const std::string& config_path,
        const std::optional<std::string>& out, const std::optional<std::uint64_t>& seed) {
  using namespace soundlab::harness;
  ExperimentConfig cfg;
  try {
    cfg = resolve_config(load_config_file(config_path), experiment, out, seed);
  } catch (const soundlab::InvalidArgument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  }
  ExperimentResult result;
  try {
    result = run_experiment(cfg);
  } catch (const soundlab::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const soundlab::InvalidArgument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  }
  write_outputs(cfg.output_dir, result.tables, cfg.resolved, result.summary);
  std::cout << "wrote " << result.tables.size() << " table(s) and manifest.json to "
            << cfg.output_dir << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  using soundlab::harness::Experiment;
  CLI::App app{"soundlab: Bogolyubov sound and mean-field excitation experiments"};
  app.set_version_flag("--version", std::string(soundlab::harness::kCodeVersion));
  app.require_subcommand(1);

  struct Options {
    std::string config;
    std::optional<std::string> out;
    std::optional<std::uint64_t> seed;
  };
  Options opt;
  std::optional<Experiment> chosen;

  const std::pair<Experiment, const char*> commands[] = {
      {Experiment::dispersion, "measure omega(k) from the linearized dynamics"},
      {Experiment::soundspeed, "fit the small-k sound speed over a volume sweep"},
      {Experiment::linearize, "compare nonlinear and linear excitation dynamics"},
      {Experiment::manybody_converge, "exact many-body dynamics vs mean field"},
      {Experiment::instability, "growth and onset for attractive potentials"},
      {Experiment::evolve, "mean-field trajectories with diagnostics"},
  };
  for (const auto& [e, help] : commands) {
    CLI::App* sub = app.add_subcommand(soundlab::harness::to_string(e), help);
    sub->add_option("--config", opt.config, "experiment configuration (JSON)")->required();
    sub->add_option("--out", opt.out, "output directory (overrides the config)");
    sub->add_option("--seed", opt.seed, "random seed (overrides the config)");
    sub->callback([&chosen, e = e] { chosen = e; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }
  try {
    return run(*chosen, opt.config, opt.out, opt.seed);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
