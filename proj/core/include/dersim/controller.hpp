#pragma once

#include <span>
#include <vector>

#include "dersim/core_model.hpp"
#include "dersim/histogram_window.hpp"
#include "dersim/mi_proxy.hpp"

namespace dersim {

struct ControllerCoefficients {
  double step_size = 0.012;  // descent step r
  double sigma1 = 5.0;       // tracking penalty weight
  double sigma2 = 1e-4;      // regularizer weight

  void validate() const;
};

struct LocalGradients {
  double g_splus = 0.0;
  double g_sminus = 0.0;
  std::vector<double> g_z;
};

// Per-tick gradients of the household objective with the aggregate mismatch
// substituted by the broadcast e_signal and held constant:
//   g_s+  =  2 (y_prev - y_ref) + sigma1 e + sigma2 s+_prev
//   g_s-  = -2 (y_prev - y_ref) - sigma1 e + sigma2 s-_prev
//   g_z_j =  mu mi_grad_j + sigma2 z_j
// with y_prev = x_hat + s+_prev - s-_prev.
LocalGradients local_gradients(double x_hat, double s_plus_prev, double s_minus_prev,
                               double y_ref, double e_signal,
                               std::span<const double> z_row,
                               std::span<const double> mi_gradient, double mu,
                               const ControllerCoefficients& k);

inline double descent_step(double prev, double gradient, double step_size) {
  return prev - step_size * gradient;
}

// Controller memory for one household. Every z row persists between ticks:
// only the row of the current x-bin moves at a tick, the others keep their
// last values and resume from them when their bin recurs.
struct HemsState {
  BatteryState battery;
  int m = 0, n = 0;
  std::vector<double> z;  // m x n, row-major
  MiProxyCoefficients coeffs;  // as of the latest tick, for observers

  static HemsState init(const HouseholdConfig& house, double initial_soc_kwh);
  std::span<double> z_row(int i_star);  // 1-based
  std::span<const double> z_row(int i_star) const;
};

struct HemsDecision {
  double s_plus = 0.0;
  double s_minus = 0.0;
  double y = 0.0;  // controller-side load, x_hat + s+ - s-
  int i_star = 0;
  std::vector<double> z_row;
  double mi_value = 0.0;
  bool flag_flipped = false;
};

// One control tick under the charge-flag discipline: gradient step in the
// flag direction and the current z row, then exact projection. A negative
// interim rate target flips the flag and actuates zero for this tick (z is
// still projected, with the rate pinned). Updates SoC, the persistent z row,
// and the histogram window; refreshed MI constants are left in state.coeffs.
HemsDecision hems_tick(HemsState& state, HistogramWindow& window, double x_hat,
                       double y_ref, double e_signal, const HouseholdConfig& house,
                       const ControllerCoefficients& k, double dt_h);

}  // namespace dersim
