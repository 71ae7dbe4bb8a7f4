#pragma once

#include <string>
#include <vector>

#include "dersim/aggregator.hpp"
#include "dersim/config.hpp"
#include "dersim/core_model.hpp"
#include "dersim/metrics.hpp"

namespace dersim {

// Scenario with all derived data resolved: loads, per-household grids and
// prices, day-ahead staircases, and the perturbed target.
struct BuiltScenario {
  ScenarioConfig config;
  std::vector<LoadTrace> traces;                 // 1 s, cover the horizon
  std::vector<HouseholdConfig> houses;
  std::vector<std::vector<double>> day_ahead;    // per household, one mean per half hour
  TargetProfile target;
};

// Loads or synthesizes traces, derives each household's bin edges from its
// observed load range (grid-load edges span [y_min, y_max], y_max defaulting
// to the trace peak plus the charge rate), draws integer privacy prices, and
// generates the target from the summed day-ahead staircases.
BuiltScenario build_scenario(const ScenarioConfig& cfg);

struct HouseholdSeries {
  std::string id;
  std::vector<double> x, x_hat, y, y_ref, s_plus, s_minus, soc, mi;
  std::vector<int> i_star;
};

struct RunResults {
  std::vector<HouseholdSeries> households;
  std::vector<double> y_hat;     // measured aggregate, per tick
  std::vector<double> y_bar;     // target, per tick
  std::vector<double> e_signal;  // broadcast mismatch, per tick
  MetricsReport metrics;         // controller resolution, post-discard window
  int ticks = 0;
  double wall_ms = 0.0;
};

// Distributed run: per tick the aggregator broadcasts e_t from the previous
// tick's measured aggregate, every household runs its controller against a
// persistent forecast refreshed on forecast boundaries, and true grid loads
// are summed. Bit-deterministic for a fixed built scenario.
RunResults run_scenario(const BuiltScenario& built);

// Full-information benchmark: at every target boundary the coupled problem
// is solved exactly with perfect consumer loads, the solution held over the
// window (flag flips requested by the solver apply at the next boundary);
// outputs match run_scenario's shape.
RunResults run_benchmark(const BuiltScenario& built);

// traces.csv, metrics.json, metrics.csv, and optionally tracking.svg under
// `outdir` (created if missing).
void emit_results(const RunResults& results, const BuiltScenario& built,
                  const std::string& outdir);

// Post-discard report from stored series at the given aggregation factor.
MetricsReport metrics_from_results(const RunResults& results, const BuiltScenario& built,
                                   int resolution_s);

}  // namespace dersim
