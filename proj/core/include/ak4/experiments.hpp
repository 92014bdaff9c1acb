#pragma once

// Experiment harness: reproducible scenario runs wired from the other
// modules, with plain-text configs and JSON/CSV reports. A report is a pure
// function of (config, seed); pass criteria restate the module-level
// postconditions, nothing more.

#include <cstdint>
#include <string>

#include "json.hpp"

#include "ak4/errors.hpp"

namespace ak4 {

inline constexpr const char* kVersion = "0.1.0";

struct ScenarioConfig {
  // [scenario]
  std::string name;           // tau | norm-invariance | conformal | junction | closedness
  int grid = 16;
  std::uint64_t seed = 42;
  int trials = 20;
  std::string out_dir;        // empty: do not write files

  // [generator]
  std::string mode = "flat";  // tau: flat | exact | perturbed; junction: generic | identical | opposite
  double epsilon = 0.0;       // perturbation amplitude
  bool volume_preserving = true;
  std::string f_mode = "zero";  // conformal scalar: zero | const | bump
  double f_value = 0.0;
  double f_amplitude = 1.0;

  // [tolerances]
  double tol_solve = 1e-8;
  double tol_ps = 1e-4;
  double tol_claim = 1e-2;    // norm-invariance relative gap
  double tol_cert = 1e-8;     // junction certificate residual
  double tol_bound = 1e-6;    // conformal bound slack

  // Strict parser for the documented key-value format: unknown keys and
  // malformed lines are ConfigError.
  static ScenarioConfig load(const std::string& path);
  static ScenarioConfig parse(const std::string& text);

  void validate() const;  // ranges: grid >= 4, epsilon >= 0, trials >= 1
};

struct Report {
  std::string scenario;
  bool passed = false;
  nlohmann::ordered_json json;  // deterministic for fixed (config, seed)
  std::string csv;              // one row per trial, fixed columns

  // writes <scenario>-report.json and <scenario>-trials.csv
  void write(const std::string& out_dir) const;
};

Report run_tau_scenario(const ScenarioConfig& cfg);
Report run_norm_invariance(const ScenarioConfig& cfg);
Report run_conformal_scenario(const ScenarioConfig& cfg);
Report run_junction_scenario(const ScenarioConfig& cfg);
Report run_closedness_diagnostic(const ScenarioConfig& cfg);

// dispatch by cfg.name
Report run_scenario(const ScenarioConfig& cfg);

}  // namespace ak4
