#pragma once

// Independent reference implementations for cross-checking the library:
// a Dykstra alternating-projection oracle for the feasible set, a sorting
// simplex projector, central finite differences, and a plug-in MI over an
// explicit probability table. Deliberately slow and separate from the
// production code paths.

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "dersim/projection.hpp"

namespace oracle {

// Euclidean projection onto { v >= 0, sum v = 1 } by the sort-and-threshold rule.
inline std::vector<double> simplex_project(std::vector<double> v) {
  std::vector<double> u = v;
  std::sort(u.begin(), u.end(), std::greater<double>());
  double css = 0.0, theta = 0.0;
  int rho = 0;
  for (std::size_t k = 0; k < u.size(); ++k) {
    css += u[k];
    const double t = (css - 1.0) / static_cast<double>(k + 1);
    if (u[k] - t > 0.0) {
      rho = static_cast<int>(k + 1);
      theta = t;
    }
  }
  (void)rho;
  for (double& x : v) x = std::max(0.0, x - theta);
  return v;
}

struct DykstraResult {
  double s = 0.0;
  std::vector<double> z;
  int cycles = 0;
};

// Projection of the interim point onto the same set `project` targets, built
// straight from the problem fields: rate interval x simplex, cut by the two
// bin-coupling halfspaces. Three-set Dykstra converges to the exact
// projection for closed convex sets.
inline DykstraResult dykstra_project(const dersim::ProjectionProblem& p,
                                     double tol = 1e-12, int max_cycles = 200000) {
  const int n = p.grid.n();
  const int dir = p.charging ? 1 : -1;
  const double delta = p.delta > 0.0 ? p.delta : dersim::default_delta(p.grid);

  double s_lo = 0.0, s_hi = 0.0;
  if (p.hold_s_at_zero) {
    s_lo = s_hi = 0.0;
  } else {
    const double rate = p.charging ? p.battery.max_charge_kw : p.battery.max_discharge_kw;
    const double room = p.charging
                            ? (p.battery.capacity_kwh - p.soc_kwh) / (p.dt_h * p.battery.efficiency)
                            : p.soc_kwh * p.battery.efficiency / p.dt_h;
    const double y_lo = p.charging ? p.y_min - p.x_hat : p.x_hat - (p.y_max - delta);
    const double y_hi = p.charging ? p.y_max - delta - p.x_hat : p.x_hat - p.y_min;
    s_lo = std::max(0.0, y_lo);
    s_hi = std::min({rate, std::max(0.0, room), y_hi});
    if (s_hi < s_lo) throw std::runtime_error("oracle: empty rate interval");
  }

  // Stacked u = (s, z). Halfspace rows a.u <= b.
  std::vector<double> a1(static_cast<std::size_t>(n) + 1), a2(a1.size());
  a1[0] = -dir;
  a2[0] = dir;
  for (int j = 0; j < n; ++j) {
    a1[static_cast<std::size_t>(j) + 1] = p.grid.y_edges[static_cast<std::size_t>(j)];
    a2[static_cast<std::size_t>(j) + 1] = -p.grid.y_edges[static_cast<std::size_t>(j) + 1];
  }
  const double b1 = p.x_hat;
  const double b2 = -p.x_hat - delta;

  auto proj_box_simplex = [&](std::vector<double>& u) {
    u[0] = std::clamp(u[0], s_lo, s_hi);
    std::vector<double> z(u.begin() + 1, u.end());
    z = simplex_project(std::move(z));
    std::copy(z.begin(), z.end(), u.begin() + 1);
  };
  auto proj_half = [](std::vector<double>& u, const std::vector<double>& a, double b) {
    double dot = 0.0, nn = 0.0;
    for (std::size_t k = 0; k < u.size(); ++k) {
      dot += a[k] * u[k];
      nn += a[k] * a[k];
    }
    if (dot <= b) return;
    const double step = (dot - b) / nn;
    for (std::size_t k = 0; k < u.size(); ++k) u[k] -= step * a[k];
  };

  std::vector<double> u(static_cast<std::size_t>(n) + 1, 0.0);
  u[0] = p.s_tilde;
  std::copy(p.z_tilde.begin(), p.z_tilde.end(), u.begin() + 1);

  std::vector<std::vector<double>> corr(3, std::vector<double>(u.size(), 0.0));
  DykstraResult out;
  for (int cycle = 0; cycle < max_cycles; ++cycle) {
    double moved = 0.0;
    for (int set = 0; set < 3; ++set) {
      std::vector<double> w = u;
      for (std::size_t k = 0; k < u.size(); ++k) w[k] += corr[static_cast<std::size_t>(set)][k];
      std::vector<double> v = w;
      if (set == 0)
        proj_box_simplex(v);
      else if (set == 1)
        proj_half(v, a1, b1);
      else
        proj_half(v, a2, b2);
      for (std::size_t k = 0; k < u.size(); ++k) {
        corr[static_cast<std::size_t>(set)][k] = w[k] - v[k];
        moved = std::max(moved, std::abs(v[k] - u[k]));
      }
      u = std::move(v);
    }
    out.cycles = cycle + 1;
    if (moved < tol) break;
  }
  out.s = u[0];
  out.z.assign(u.begin() + 1, u.end());
  return out;
}

// Central difference d f / d x_k with the other coordinates held.
inline double central_diff(const std::function<double(const std::vector<double>&)>& f,
                           std::vector<double> x, std::size_t k, double h) {
  const double x0 = x[k];
  x[k] = x0 + h;
  const double fp = f(x);
  x[k] = x0 - h;
  const double fm = f(x);
  return (fp - fm) / (2.0 * h);
}

// Plug-in mutual information (bits) of an explicit joint table.
inline double table_mi(const std::vector<double>& joint, int m, int n) {
  std::vector<double> px(static_cast<std::size_t>(m), 0.0), py(static_cast<std::size_t>(n), 0.0);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) {
      const double v = joint[static_cast<std::size_t>(i) * n + j];
      px[static_cast<std::size_t>(i)] += v;
      py[static_cast<std::size_t>(j)] += v;
    }
  double mi = 0.0;
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) {
      const double v = joint[static_cast<std::size_t>(i) * n + j];
      if (v > 0.0)
        mi += v * std::log2(v / (px[static_cast<std::size_t>(i)] * py[static_cast<std::size_t>(j)]));
    }
  return mi;
}

}  // namespace oracle
