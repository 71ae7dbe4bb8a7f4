#include "dersim/controller.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "dersim/projection.hpp"

namespace dersim {

void ControllerCoefficients::validate() const {
  if (!(step_size > 0.0)) throw std::invalid_argument("controller: step size must be positive");
  if (!(sigma1 >= 0.0) || !(sigma2 >= 0.0))
    throw std::invalid_argument("controller: penalty weights must be non-negative");
}

LocalGradients local_gradients(double x_hat, double s_plus_prev, double s_minus_prev,
                               double y_ref, double e_signal,
                               std::span<const double> z_row,
                               std::span<const double> mi_gradient, double mu,
                               const ControllerCoefficients& k) {
  if (z_row.size() != mi_gradient.size())
    throw std::invalid_argument("local_gradients: z-row / MI gradient length mismatch");
  const double y_prev = grid_load(x_hat, s_plus_prev, s_minus_prev);
  const double track = 2.0 * (y_prev - y_ref) + k.sigma1 * e_signal;
  LocalGradients g;
  g.g_splus = track + k.sigma2 * s_plus_prev;
  g.g_sminus = -track + k.sigma2 * s_minus_prev;
  g.g_z.resize(z_row.size());
  for (std::size_t j = 0; j < z_row.size(); ++j)
    g.g_z[j] = mu * mi_gradient[j] + k.sigma2 * z_row[j];
  return g;
}

HemsState HemsState::init(const HouseholdConfig& house, double initial_soc_kwh) {
  house.validate();
  if (initial_soc_kwh < 0.0 || initial_soc_kwh > house.battery.capacity_kwh)
    throw std::invalid_argument("initial SoC outside the battery box");
  HemsState st;
  st.battery.soc_kwh = initial_soc_kwh;
  st.battery.charging = true;
  st.m = house.grid.m();
  st.n = house.grid.n();
  st.z.assign(static_cast<std::size_t>(st.m) * st.n, 1.0 / st.n);
  return st;
}

std::span<double> HemsState::z_row(int i_star) {
  return {z.data() + static_cast<std::size_t>(i_star - 1) * n, static_cast<std::size_t>(n)};
}

std::span<const double> HemsState::z_row(int i_star) const {
  return {z.data() + static_cast<std::size_t>(i_star - 1) * n, static_cast<std::size_t>(n)};
}

HemsDecision hems_tick(HemsState& state, HistogramWindow& window, double x_hat,
                       double y_ref, double e_signal, const HouseholdConfig& house,
                       const ControllerCoefficients& k, double dt_h) {
  if (!std::isfinite(x_hat) || !std::isfinite(y_ref) || !std::isfinite(e_signal))
    throw std::invalid_argument("hems_tick: non-finite input");

  HemsDecision d;
  d.i_star = quantize(x_hat, house.grid.x_edges);

  // Constants from the window as of the end of the previous tick; the slot
  // being decided now is not in the counts but is charged to D.
  state.coeffs = mi_proxy_coefficients(window.pdf(), d.i_star);

  auto z_prev = state.z_row(d.i_star);
  const auto mi_grad = mi_proxy_gradient(state.coeffs, z_prev);
  const LocalGradients g =
      local_gradients(x_hat, state.battery.s_plus, state.battery.s_minus, y_ref,
                      e_signal, z_prev, mi_grad, house.mu, k);

  ProjectionProblem prob;
  prob.charging = state.battery.charging;
  prob.x_hat = x_hat;
  prob.soc_kwh = state.battery.soc_kwh;
  prob.battery = house.battery;
  prob.grid = house.grid;
  prob.y_min = house.y_min_kw;
  prob.y_max = house.y_max_kw;
  prob.dt_h = dt_h;
  prob.z_tilde.resize(z_prev.size());
  for (std::size_t j = 0; j < z_prev.size(); ++j)
    prob.z_tilde[j] = descent_step(z_prev[j], g.g_z[j], k.step_size);

  const bool was_charging = state.battery.charging;
  const double s_prev = was_charging ? state.battery.s_plus : state.battery.s_minus;
  const double g_s = was_charging ? g.g_splus : g.g_sminus;
  const double s_target = descent_step(s_prev, g_s, k.step_size);

  ProjectionResult proj;
  if (s_target < 0.0) {
    // The interim rate wants the opposite sign: flip the flag, actuate zero,
    // still settle z against the pinned load.
    prob.hold_s_at_zero = true;
    proj = project(prob);
    state.battery.charging = !was_charging;
    d.flag_flipped = true;
    d.s_plus = 0.0;
    d.s_minus = 0.0;
  } else {
    prob.s_tilde = s_target;
    proj = project(prob);
    // The solver certifies feasibility to 1e-9; snap that slack out before
    // actuating so rates and SoC stay physical.
    const BatteryParams& bp = house.battery;
    const double rate = was_charging ? bp.max_charge_kw : bp.max_discharge_kw;
    const double soc_room = was_charging
                                ? (bp.capacity_kwh - state.battery.soc_kwh) / (dt_h * bp.efficiency)
                                : state.battery.soc_kwh * bp.efficiency / dt_h;
    const double s_act = std::max(0.0, std::min(proj.s, std::min(rate, soc_room)));
    d.s_plus = was_charging ? s_act : 0.0;
    d.s_minus = was_charging ? 0.0 : s_act;
  }

  state.battery.soc_kwh = battery_step(state.battery.soc_kwh, d.s_plus, d.s_minus,
                                       house.battery.efficiency, dt_h);
  state.battery.s_plus = d.s_plus;
  state.battery.s_minus = d.s_minus;

  auto row = state.z_row(d.i_star);
  for (std::size_t j = 0; j < row.size(); ++j) row[j] = proj.z[j];
  window.update(d.i_star, proj.z);

  d.y = grid_load(x_hat, d.s_plus, d.s_minus);
  d.z_row = std::move(proj.z);
  d.mi_value = mi_proxy_value(state.coeffs, d.z_row);
  return d;
}

}  // namespace dersim
