// ak4: scenario runner for the hermitian-triple tool chain.
//
// One subcommand per scenario; each loads an optional key-value config file,
// applies command-line overrides, runs deterministically from the seed, and
// writes <scenario>-report.json plus <scenario>-trials.csv to --out.
//
//   ak4 tau --grid 16 --seed 42 --out out/tau
//   ak4 junction --config configs/junction.cfg --trials 1000
//
// Exit codes: 0 all pass, 1 any scenario failure, 2 configuration error.

#include <array>
#include <chrono>
#include <exception>
#include <iostream>
#include <string>

#include "CLI11.hpp"

#include "ak4/errors.hpp"
#include "ak4/experiments.hpp"

namespace {

struct CliOverrides {
  std::string config_path;
  std::string out_dir;
  bool has_seed = false;
  std::uint64_t seed = 0;
  bool has_grid = false;
  int grid = 0;
  bool has_trials = false;
  int trials = 0;
  std::string mode;
  bool has_epsilon = false;
  double epsilon = 0.0;
};

void add_common_flags(CLI::App* cmd, CliOverrides& o) {
  cmd->add_option("--config", o.config_path, "scenario config file");
  cmd->add_option("--out", o.out_dir, "output directory for reports");
  cmd->add_option("--seed", o.seed, "base seed")->each([&](const std::string&) {
    o.has_seed = true;
  });
  cmd->add_option("--grid", o.grid, "cells per axis (n >= 4)")
      ->each([&](const std::string&) { o.has_grid = true; });
  cmd->add_option("--trials", o.trials, "number of trials")
      ->each([&](const std::string&) { o.has_trials = true; });
  cmd->add_option("--mode", o.mode, "generator mode");
  cmd->add_option("--epsilon", o.epsilon, "perturbation amplitude")
      ->each([&](const std::string&) { o.has_epsilon = true; });
}

// scenario-specific defaults applied before overrides
void scenario_defaults(const std::string& name, ak4::ScenarioConfig& cfg) {
  if (name == "junction") {
    cfg.mode = "generic";
    cfg.trials = 1000;
  } else if (name == "norm-invariance") {
    cfg.epsilon = 0.05;
    cfg.trials = 3;
  } else if (name == "conformal") {
    cfg.f_mode = "bump";
    cfg.trials = 20;
  } else if (name == "closedness") {
    cfg.grid = 8;
    cfg.f_amplitude = 1.0;
  } else if (name == "tau") {
    cfg.mode = "flat";
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"hermitian triples on the 4-torus: scenario experiments"};
  app.require_subcommand(1);

  const std::array<std::string, 5> names = {"tau", "norm-invariance",
                                            "conformal", "junction",
                                            "closedness"};
  std::array<CliOverrides, 5> overrides;
  for (size_t i = 0; i < names.size(); ++i) {
    CLI::App* cmd = app.add_subcommand(names[i], names[i] + " scenario");
    add_common_flags(cmd, overrides[i]);
  }

  CLI11_PARSE(app, argc, argv);

  std::string scenario;
  const CliOverrides* chosen = nullptr;
  for (size_t i = 0; i < names.size(); ++i) {
    if (app.got_subcommand(names[i])) {
      scenario = names[i];
      chosen = &overrides[i];
    }
  }

  try {
    // defaults, then config file, then flags
    const CliOverrides& o = *chosen;
    ak4::ScenarioConfig cfg;
    scenario_defaults(scenario, cfg);
    if (!o.config_path.empty()) {
      cfg = ak4::ScenarioConfig::load(o.config_path);
      if (!cfg.name.empty() && cfg.name != scenario) {
        throw ak4::ConfigError("config names scenario '" + cfg.name +
                               "' but subcommand is '" + scenario + "'");
      }
    }
    cfg.name = scenario;
    if (!o.out_dir.empty()) cfg.out_dir = o.out_dir;
    if (o.has_seed) cfg.seed = o.seed;
    if (o.has_grid) cfg.grid = o.grid;
    if (o.has_trials) cfg.trials = o.trials;
    if (!o.mode.empty()) cfg.mode = o.mode;
    if (o.has_epsilon) cfg.epsilon = o.epsilon;
    cfg.validate();

    const auto start = std::chrono::steady_clock::now();
    const ak4::Report report = ak4::run_scenario(cfg);
    const auto elapsed = std::chrono::duration<double>(
                             std::chrono::steady_clock::now() - start)
                             .count();

    if (!cfg.out_dir.empty()) {
      report.write(cfg.out_dir);
    } else {
      std::cout << report.json.dump(2) << "\n";
    }
    // timing goes to stderr only; reports stay byte-identical across runs
    std::cerr << scenario << ": " << (report.passed ? "pass" : "FAIL") << " ("
              << elapsed << " s)\n";
    return report.passed ? 0 : 1;
  } catch (const ak4::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const ak4::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
