#include "dersim/core_model.hpp"

#include <cmath>
#include <stdexcept>

namespace dersim {

void LoadTrace::validate() const {
  if (values.empty()) throw std::invalid_argument("load trace '" + id + "' is empty");
  if (!(dt_s > 0.0)) throw std::invalid_argument("load trace '" + id + "' has non-positive dt");
  for (double v : values) {
    if (!std::isfinite(v) || v < 0.0)
      throw std::invalid_argument("load trace '" + id + "' has a non-finite or negative sample");
  }
}

void BatteryParams::validate() const {
  if (!(capacity_kwh > 0.0)) throw std::invalid_argument("battery capacity must be positive");
  if (!(max_charge_kw >= 0.0) || !(max_discharge_kw >= 0.0))
    throw std::invalid_argument("battery rate limits must be non-negative");
  if (!(efficiency > 0.0) || efficiency > 1.0)
    throw std::invalid_argument("battery efficiency must lie in (0, 1]");
}

void QuantizationGrid::validate() const {
  if (x_edges.size() < 2 || y_edges.size() < 2)
    throw std::invalid_argument("quantization grid needs at least two edges per axis");
  for (std::size_t k = 1; k < x_edges.size(); ++k)
    if (!(x_edges[k] > x_edges[k - 1]))
      throw std::invalid_argument("x_edges must be strictly increasing");
  for (std::size_t k = 1; k < y_edges.size(); ++k)
    if (!(y_edges[k] > y_edges[k - 1]))
      throw std::invalid_argument("y_edges must be strictly increasing");
}

void HouseholdConfig::validate() const {
  battery.validate();
  grid.validate();
  if (!(mu >= 0.0)) throw std::invalid_argument("privacy price mu must be non-negative");
  if (!(y_max_kw > y_min_kw)) throw std::invalid_argument("y_max must exceed y_min");
  if (!(reserve_kw >= 0.0)) throw std::invalid_argument("reserve must be non-negative");
}

void TimingConfig::validate() const {
  if (control_dt_s <= 0) throw std::invalid_argument("control_dt must be positive");
  if (forecast_dt_s <= 0 || forecast_dt_s % control_dt_s != 0)
    throw std::invalid_argument("forecast_dt must be a positive multiple of control_dt");
  if (target_dt_s <= 0 || target_dt_s % control_dt_s != 0)
    throw std::invalid_argument("target_dt must be a positive multiple of control_dt");
  if (horizon_s <= 0 || horizon_s % control_dt_s != 0)
    throw std::invalid_argument("horizon must be a positive multiple of control_dt");
  if (discard_s < 0 || discard_s >= horizon_s)
    throw std::invalid_argument("discard must be non-negative and shorter than the horizon");
}

int quantize(double value, std::span<const double> edges) {
  if (edges.size() < 2) throw std::invalid_argument("quantize: need at least two bin edges");
  if (!std::isfinite(value)) throw std::invalid_argument("quantize: non-finite value");
  const int bins = static_cast<int>(edges.size()) - 1;
  if (value < edges[0]) return 1;
  if (value >= edges[bins]) return bins;
  // Binary search for the half-open interval [edges[j-1], edges[j]).
  int lo = 0, hi = bins;
  while (hi - lo > 1) {
    const int mid = (lo + hi) / 2;
    if (value >= edges[mid])
      lo = mid;
    else
      hi = mid;
  }
  return lo + 1;
}

double battery_step(double soc_kwh, double s_plus_kw, double s_minus_kw,
                    double efficiency, double dt_h) {
  if (!(efficiency > 0.0) || efficiency > 1.0)
    throw std::invalid_argument("battery_step: efficiency must lie in (0, 1]");
  if (!(dt_h > 0.0)) throw std::invalid_argument("battery_step: dt must be positive");
  if (s_plus_kw < 0.0 || s_minus_kw < 0.0)
    throw std::invalid_argument("battery_step: rates must be non-negative");
  if (s_plus_kw > 0.0 && s_minus_kw > 0.0)
    throw std::invalid_argument("battery_step: simultaneous charge and discharge");
  return soc_kwh + dt_h * (efficiency * s_plus_kw - s_minus_kw / efficiency);
}

}  // namespace dersim
