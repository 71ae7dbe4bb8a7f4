#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "dersim/core_model.hpp"

namespace dersim {

// Target aggregate load on the target_dt grid: a half-hourly base staircase
// plus a per-period perturbation that is energy-neutral per half hour.
struct TargetProfile {
  int target_dt_s = 5;
  double gamma_bar_kw = 0.0;  // perturbation reserve, N * per-household reserve
  std::vector<double> values_kw;  // one per target period

  // Piecewise-constant lookup at control resolution.
  double at_tick(int tick_s) const { return values_kw[static_cast<std::size_t>(tick_s) / target_dt_s]; }
};

inline double measure_aggregate(std::span<const double> loads_kw) {
  double sum = 0.0;
  for (double v : loads_kw) sum += v;
  return sum;
}

// Broadcast mismatch e_t = y_hat(t-1) - y_bar(t). Signed, so households can
// steer up as well as down; magnitude carries the tracking error.
inline double broadcast_signal(double y_hat_prev, double y_bar_now) {
  return y_hat_prev - y_bar_now;
}

// Half-hourly mean staircase over a 1 s load history; the stand-in for a
// day-ahead schedule. Requires at least one full window.
std::vector<double> generate_day_ahead(const LoadTrace& history, int window_s = 1800);

// Draws the target: base is the half-hourly aggregate staircase, horizon_s
// must be a whole number of half hours matching base.size(). Perturbations
// are Gaussian with stddev gamma_bar/3, clipped to +/- gamma_bar, then
// demeaned per half hour so each window stays energy neutral. Deterministic
// in the seed.
TargetProfile generate_target(std::span<const double> base_half_hourly, double gamma_bar_kw,
                              int target_dt_s, int horizon_s, std::uint64_t seed);

}  // namespace dersim
