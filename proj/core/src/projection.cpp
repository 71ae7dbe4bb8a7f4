#include "dersim/projection.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "dersim/qp.hpp"
#include "feasible_set.hpp"

namespace dersim {

namespace {
constexpr double kTol = 1e-9;
}

namespace detail {

namespace {

double min_bin_width(const QuantizationGrid& grid) {
  double w = grid.y_edges[1] - grid.y_edges[0];
  for (std::size_t k = 2; k < grid.y_edges.size(); ++k)
    w = std::min(w, grid.y_edges[k] - grid.y_edges[k - 1]);
  return w;
}

[[noreturn]] void throw_infeasible(const ProjectionProblem& p, double s_lo, double s_hi) {
  std::ostringstream os;
  os << "projection: empty feasible set for the " << (p.charging ? "charge" : "discharge")
     << " rate: required interval [" << s_lo << ", " << s_hi << "] kW is empty"
     << " (x_hat=" << p.x_hat << " kW, soc=" << p.soc_kwh << " kWh, y in [" << p.y_min
     << ", " << p.y_max << "])";
  throw std::runtime_error(os.str());
}

// Feasible z for a fixed load y in [y_min, y_max - delta]: all mass on the
// bin holding y, split with the next bin when y sits within delta of the
// bin's upper edge. The seed is clamped onto the grid span: callers may pass
// a y from a box that never meets the grid, and that infeasibility belongs
// to the start check, not here.
std::vector<double> seed_z(double y, const QuantizationGrid& grid, double delta) {
  const int n = grid.n();
  std::vector<double> z(static_cast<std::size_t>(n), 0.0);
  y = std::clamp(y, grid.y_edges[0], grid.y_edges[static_cast<std::size_t>(n)] - delta);
  const int j = quantize(y, grid.y_edges);
  const double uj = grid.y_edges[j];
  if (y <= uj - delta) {
    z[j - 1] = 1.0;
    return z;
  }
  // y inside the delta margin below uj; j < n because the clamp keeps y at
  // least delta under the top edge.
  const double lj = grid.y_edges[j - 1];
  const double l2 = grid.y_edges[j], u2 = grid.y_edges[j + 1];
  const double w_lo = (y + delta - uj) / (u2 - uj);
  const double w_hi = std::min(1.0, (y - lj) / (l2 - lj));
  const double w = 0.5 * (w_lo + w_hi);
  z[j - 1] = 1.0 - w;
  z[j] = w;
  return z;
}

void add_z_rows(ConstraintSet& c, const QuantizationGrid& grid, int s_cols, int dir,
                double x_hat, double delta) {
  const int n = grid.n();
  const int dim = s_cols + n;
  std::vector<double> row(static_cast<std::size_t>(dim), 0.0);

  for (int j = 0; j < n; ++j) row[s_cols + j] = 1.0;
  c.add_eq(row, 1.0);

  for (int j = 0; j < n; ++j) {
    std::fill(row.begin(), row.end(), 0.0);
    row[s_cols + j] = -1.0;
    c.add_ineq(row, 0.0);
  }
  // Coupling: sum z_j L_j <= y and y <= sum z_j U_j - delta, y = x_hat + dir*s.
  std::fill(row.begin(), row.end(), 0.0);
  if (s_cols) row[0] = -dir;
  for (int j = 0; j < n; ++j) row[s_cols + j] = grid.y_edges[j];
  c.add_ineq(row, x_hat);
  if (s_cols) row[0] = dir;
  for (int j = 0; j < n; ++j) row[s_cols + j] = -grid.y_edges[j + 1];
  c.add_ineq(row, -x_hat - delta);
}

}  // namespace

FeasibleSet build_feasible_set(const ProjectionProblem& p) {
  FeasibleSet fs;
  fs.n = p.grid.n();
  fs.dir = p.charging ? 1 : -1;
  fs.delta = p.delta > 0.0 ? p.delta : default_delta(p.grid);
  const double width = min_bin_width(p.grid);
  if (!(fs.delta > 0.0) || fs.delta > 1e-6 * width)
    throw std::invalid_argument("projection: delta must lie in (0, 1e-6 * smallest bin width]");

  if (p.hold_s_at_zero) {
    fs.s_fixed = true;
    fs.s_value = 0.0;
    const double y = p.x_hat;
    if (y < p.y_min - kTol || y > p.y_max - fs.delta + kTol) throw_infeasible(p, 0.0, 0.0);
  } else {
    const double soc_room =
        p.charging ? std::max(0.0, (p.battery.capacity_kwh - p.soc_kwh) /
                                       (p.dt_h * p.battery.efficiency))
                   : std::max(0.0, p.soc_kwh * p.battery.efficiency / p.dt_h);
    const double rate = p.charging ? p.battery.max_charge_kw : p.battery.max_discharge_kw;
    // Grid-load box folded onto the rate; the strict-inequality margin is
    // charged to the upper y end so the coupling rows always have room.
    const double y_room_hi =
        p.charging ? (p.y_max - fs.delta - p.x_hat) : (p.x_hat - p.y_min);
    const double y_room_lo =
        p.charging ? (p.y_min - p.x_hat) : (p.x_hat - (p.y_max - fs.delta));
    fs.s_lo = std::max(0.0, y_room_lo);
    fs.s_hi = std::min({rate, soc_room, y_room_hi});
    if (fs.s_lo > fs.s_hi + 1e-12) throw_infeasible(p, fs.s_lo, fs.s_hi);
    if (fs.s_hi - fs.s_lo <= 1e-12) {
      // Degenerate rate interval: pin s so the box never puts a dependent
      // row pair into an active set.
      fs.s_fixed = true;
      fs.s_value = std::clamp(0.5 * (fs.s_lo + fs.s_hi), 0.0, fs.s_hi);
    }
  }

  const int s_cols = fs.s_fixed ? 0 : 1;
  const double x_eff = fs.s_fixed ? p.x_hat + fs.dir * fs.s_value : p.x_hat;
  fs.rows = ConstraintSet(s_cols + fs.n);
  if (!fs.s_fixed) {
    std::vector<double> row(static_cast<std::size_t>(fs.rows.dim), 0.0);
    row[0] = -1.0;
    fs.rows.add_ineq(row, -fs.s_lo);
    row[0] = 1.0;
    fs.rows.add_ineq(row, fs.s_hi);
  }
  add_z_rows(fs.rows, p.grid, s_cols, fs.dir, x_eff, fs.delta);
  return fs;
}

std::vector<double> feasible_start(const ProjectionProblem& p, const FeasibleSet& fs,
                                   double s_pref) {
  const double delta = fs.delta;
  if (fs.s_fixed) {
    const double y = std::clamp(p.x_hat + fs.dir * fs.s_value, p.y_min, p.y_max - delta);
    return seed_z(y, p.grid, delta);
  }
  std::vector<double> u(static_cast<std::size_t>(fs.n) + 1);
  const double s0 = std::clamp(s_pref, fs.s_lo, fs.s_hi);
  u[0] = s0;
  const double y = std::clamp(p.x_hat + fs.dir * s0, p.y_min, p.y_max - delta);
  const auto z = seed_z(y, p.grid, delta);
  std::copy(z.begin(), z.end(), u.begin() + 1);
  return u;
}

}  // namespace detail

double default_delta(const QuantizationGrid& grid) {
  double w = grid.y_edges[1] - grid.y_edges[0];
  for (std::size_t k = 2; k < grid.y_edges.size(); ++k)
    w = std::min(w, grid.y_edges[k] - grid.y_edges[k - 1]);
  return 1e-9 * w;
}

ProjectionResult project(const ProjectionProblem& p) {
  p.grid.validate();
  p.battery.validate();
  const int n = p.grid.n();
  if (static_cast<int>(p.z_tilde.size()) != n)
    throw std::invalid_argument("projection: z_tilde length mismatch");
  if (!(p.dt_h > 0.0)) throw std::invalid_argument("projection: dt must be positive");

  const detail::FeasibleSet fs = detail::build_feasible_set(p);
  const std::vector<double> start = detail::feasible_start(p, fs, p.s_tilde);

  std::vector<double> u0;
  if (fs.s_fixed) {
    u0 = p.z_tilde;
  } else {
    u0.resize(static_cast<std::size_t>(n) + 1);
    u0[0] = p.s_tilde;
    std::copy(p.z_tilde.begin(), p.z_tilde.end(), u0.begin() + 1);
  }

  QpResult qr = project_point(fs.rows, u0, start);
  if (qr.kkt_residual > 1e-9)
    throw std::runtime_error("projection: KKT residual above 1e-9");

  ProjectionResult out;
  out.kkt_residual = qr.kkt_residual;
  out.iterations = qr.iterations;
  if (fs.s_fixed) {
    out.s = fs.s_value;
    out.z = std::move(qr.u);
  } else {
    out.s = qr.u[0];
    out.z.assign(qr.u.begin() + 1, qr.u.end());
  }
  return out;
}

FeasibilityReport feasible_check(double s, std::span<const double> z,
                                 const ProjectionProblem& p) {
  FeasibilityReport rep;
  auto flag = [&rep](const std::string& msg) {
    rep.ok = false;
    rep.violations.push_back(msg);
  };
  const int n = p.grid.n();
  const double delta = p.delta > 0.0 ? p.delta : default_delta(p.grid);
  const int dir = p.charging ? 1 : -1;
  const double rate = p.charging ? p.battery.max_charge_kw : p.battery.max_discharge_kw;

  if (static_cast<int>(z.size()) != n) {
    flag("z-row length mismatch");
    return rep;
  }
  std::ostringstream os;
  if (s < -kTol) flag("rate negative");
  if (s > rate + kTol) {
    os << "rate " << s << " above limit " << rate;
    flag(os.str());
  }
  const double soc_next = p.soc_kwh + p.dt_h * (p.charging ? p.battery.efficiency * s
                                                           : -s / p.battery.efficiency);
  if (soc_next < -kTol || soc_next > p.battery.capacity_kwh + kTol) {
    os.str("");
    os << "SoC after actuation " << soc_next << " outside [0, " << p.battery.capacity_kwh << "]";
    flag(os.str());
  }
  const double y = p.x_hat + dir * s;
  if (y < p.y_min - kTol || y > p.y_max + kTol) {
    os.str("");
    os << "grid load " << y << " outside [" << p.y_min << ", " << p.y_max << "]";
    flag(os.str());
  }
  double zsum = 0.0, zlo = 0.0, zhi = 0.0;
  for (int j = 0; j < n; ++j) {
    if (z[j] < -kTol || z[j] > 1.0 + kTol) {
      os.str("");
      os << "z[" << j + 1 << "] = " << z[j] << " outside [0, 1]";
      flag(os.str());
    }
    zsum += z[j];
    zlo += z[j] * p.grid.y_edges[j];
    zhi += z[j] * p.grid.y_edges[j + 1];
  }
  if (std::abs(zsum - 1.0) > kTol) {
    os.str("");
    os << "z-row sums to " << zsum;
    flag(os.str());
  }
  if (zlo > y + kTol) {
    os.str("");
    os << "coupling low: z-weighted lower edges " << zlo << " exceed load " << y;
    flag(os.str());
  }
  if (y > zhi - delta + kTol) {
    os.str("");
    os << "coupling high: load " << y << " reaches z-weighted upper edges " << zhi;
    flag(os.str());
  }
  return rep;
}

}  // namespace dersim
