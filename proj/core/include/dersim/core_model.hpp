#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace dersim {

// A household consumer-load trace on a uniform grid. Values are kW, finite
// and non-negative; dt is seconds per sample.
struct LoadTrace {
  std::string id;
  std::int64_t start_time_s = 0;  // epoch seconds of the first sample
  double dt_s = 1.0;
  std::vector<double> values;

  void validate() const;  // throws std::invalid_argument on violation
};

struct BatteryParams {
  double capacity_kwh = 6.4;
  double max_charge_kw = 3.3;     // s+ rate limit
  double max_discharge_kw = 3.3;  // s- rate limit
  double efficiency = 0.96;       // one-way, applied on both paths

  void validate() const;
};

struct BatteryState {
  double soc_kwh = 0.0;
  bool charging = true;  // charge flag: true -> only s+ may act this tick
  double s_plus = 0.0;   // last actuation, kW
  double s_minus = 0.0;
};

// Histogram bin edges used by the privacy proxy. x_edges quantize the
// consumer load (m bins), y_edges the grid load (n bins). Edges are strictly
// increasing; y_edges span [y_min, y_max] of the household.
struct QuantizationGrid {
  std::vector<double> x_edges;  // m + 1
  std::vector<double> y_edges;  // n + 1

  int m() const { return static_cast<int>(x_edges.size()) - 1; }
  int n() const { return static_cast<int>(y_edges.size()) - 1; }
  void validate() const;
};

// Static per-household data assembled by the harness.
struct HouseholdConfig {
  std::string id;
  BatteryParams battery;
  QuantizationGrid grid;
  double mu = 1.0;       // privacy price, >= 0
  double y_min_kw = 0.0; // grid-load box
  double y_max_kw = 0.0;
  double reserve_kw = 0.15;  // per-household target perturbation reserve

  void validate() const;
};

struct TimingConfig {
  int control_dt_s = 1;
  int forecast_dt_s = 5;  // persistent-forecast refresh period
  int target_dt_s = 5;    // target resample period
  int horizon_s = 14400;
  int discard_s = 1800;   // transient excluded from metrics

  void validate() const;
};

// Half-open equal-treatment bin lookup: returns the 1-based index j with
// edges[j-1] <= v < edges[j]; values outside the span clamp to the first or
// last bin. Throws on non-finite input or fewer than two edges.
int quantize(double value, std::span<const double> edges);

// One-step SoC update e' = e + dt*(eta*s_plus - s_minus/eta). dt in hours.
// Rates must be non-negative and at most one of them positive.
double battery_step(double soc_kwh, double s_plus_kw, double s_minus_kw,
                    double efficiency, double dt_h);

inline double grid_load(double x_kw, double s_plus_kw, double s_minus_kw) {
  return x_kw + s_plus_kw - s_minus_kw;
}

}  // namespace dersim
