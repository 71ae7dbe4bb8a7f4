#include "dersim/aggregator.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "dersim/rng.hpp"

namespace dersim {

std::vector<double> generate_day_ahead(const LoadTrace& history, int window_s) {
  history.validate();
  if (window_s <= 0) throw std::invalid_argument("day-ahead: window must be positive");
  const auto samples_per_window = static_cast<std::size_t>(window_s / history.dt_s);
  if (samples_per_window == 0 || history.values.size() < samples_per_window)
    throw std::invalid_argument("day-ahead: history shorter than one window");
  const std::size_t windows = history.values.size() / samples_per_window;
  std::vector<double> staircase(windows);
  for (std::size_t w = 0; w < windows; ++w) {
    double sum = 0.0;
    for (std::size_t k = 0; k < samples_per_window; ++k)
      sum += history.values[w * samples_per_window + k];
    staircase[w] = sum / static_cast<double>(samples_per_window);
  }
  return staircase;
}

TargetProfile generate_target(std::span<const double> base_half_hourly, double gamma_bar_kw,
                              int target_dt_s, int horizon_s, std::uint64_t seed) {
  if (target_dt_s <= 0 || 1800 % target_dt_s != 0)
    throw std::invalid_argument("target: target_dt must divide a half hour");
  if (horizon_s <= 0 || horizon_s % 1800 != 0)
    throw std::invalid_argument("target: horizon must be a whole number of half hours");
  if (!(gamma_bar_kw >= 0.0)) throw std::invalid_argument("target: gamma_bar must be non-negative");
  const std::size_t windows = static_cast<std::size_t>(horizon_s) / 1800;
  if (base_half_hourly.size() != windows)
    throw std::invalid_argument("target: base staircase length does not match the horizon");

  TargetProfile prof;
  prof.target_dt_s = target_dt_s;
  prof.gamma_bar_kw = gamma_bar_kw;
  const std::size_t per_window = 1800 / static_cast<std::size_t>(target_dt_s);
  prof.values_kw.resize(windows * per_window);

  Rng rng(seed);
  const double sigma = gamma_bar_kw / 3.0;
  std::vector<double> delta(per_window);
  for (std::size_t w = 0; w < windows; ++w) {
    double mean = 0.0;
    for (std::size_t k = 0; k < per_window; ++k) {
      delta[k] = std::clamp(rng.normal(0.0, sigma), -gamma_bar_kw, gamma_bar_kw);
      mean += delta[k];
    }
    mean /= static_cast<double>(per_window);
    // Energy neutrality: remove the realized window mean. The shift is small
    // against gamma_bar, so the clip stays honored for all but a tail sliver.
    for (std::size_t k = 0; k < per_window; ++k)
      prof.values_kw[w * per_window + k] = base_half_hourly[w] + (delta[k] - mean);
  }
  return prof;
}

}  // namespace dersim
