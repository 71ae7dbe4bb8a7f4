#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dersim/controller.hpp"
#include "dersim/core_model.hpp"

namespace dersim {

// Full scenario description, file-addressable as flat [section] key = value
// text. y_max_kw = 0 means "derive from the trace peak plus the charge
// rate"; an empty trace file list means synthetic loads.
struct ScenarioConfig {
  TimingConfig timing;
  ControllerCoefficients controller;

  int households = 20;
  double reserve_kw = 0.15;  // per-household slice of the target perturbation
  double y_min_kw = 0.0;
  double y_max_kw = 0.0;

  BatteryParams battery;
  double initial_soc_kwh = 3.2;

  int window_size = 901;  // stored samples + the undecided current slot
  int x_bins = 15;
  int y_bins = 15;
  double smoothing = 0.1;
  int mu_min = 1;  // integer privacy-price draw, inclusive
  int mu_max = 9;
  std::vector<double> mu_values;  // explicit per-household prices, overrides the draw

  std::uint64_t seed_target = 1;
  std::uint64_t seed_mu = 2;
  std::uint64_t seed_traces = 3;
  std::uint64_t seed_noise = 4;

  std::string trace_dir;                 // optional prefix for trace_files
  std::vector<std::string> trace_files;  // empty -> synthesize households loads
  double measurement_noise_std = 0.0;    // additive noise on the measured aggregate

  std::string output_dir = "out";
  bool figures = false;

  void validate() const;
  // trace_files with trace_dir prepended
  std::vector<std::string> trace_paths() const;
};

// Strict INI-style parser: [section] headers, key = value lines, full-line
// # or ; comments. Unknown sections or keys, malformed values, and
// violations of ScenarioConfig invariants all throw with the line number.
ScenarioConfig parse_scenario_config(const std::string& path);

}  // namespace dersim
