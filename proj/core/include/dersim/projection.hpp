#pragma once

#include <span>
#include <string>
#include <vector>

#include "dersim/core_model.hpp"

namespace dersim {

// One household's per-tick feasible set, restricted to the flag-active
// storage direction. Variables are (s, z): s is the active charge or
// discharge rate (the opposite rate is pinned at zero and not a variable),
// z the fractional y-bin weights of the current sample. The set couples the
// resulting grid load y = x_hat +/- s to the z-weighted bin edges:
//   sum_j z_j y_edge[j-1]  <=  y  <=  sum_j z_j y_edge[j] - delta,
// where delta stands in for the strict upper inequality so feasibility stays
// machine-checkable.
struct ProjectionProblem {
  double s_tilde = 0.0;
  std::vector<double> z_tilde;
  bool charging = true;        // flag direction for s
  bool hold_s_at_zero = false; // flip tick: project z only, s pinned at 0
  double x_hat = 0.0;          // kW
  double soc_kwh = 0.0;
  BatteryParams battery;
  QuantizationGrid grid;       // y_edges drive the coupling rows
  double y_min = 0.0;
  double y_max = 0.0;
  double dt_h = 1.0 / 3600.0;  // horizon the SoC bound must survive
  double delta = 0.0;          // 0 -> default_delta(grid)
};

struct ProjectionResult {
  double s = 0.0;
  std::vector<double> z;
  double kkt_residual = 0.0;
  int iterations = 0;
};

struct FeasibilityReport {
  bool ok = true;
  std::vector<std::string> violations;
};

// 1e-9 of the smallest y-bin width: far below any physical scale, big enough
// to survive double rounding in the coupling rows.
double default_delta(const QuantizationGrid& grid);

// Exact Euclidean projection of (s_tilde, z_tilde) onto the set. Throws an
// infeasibility error naming the violated interval when the set is empty;
// otherwise the result satisfies every constraint with a KKT residual
// certified <= 1e-9.
ProjectionResult project(const ProjectionProblem& p);

// Constraint-by-constraint audit of a candidate point at 1e-9 tolerance.
FeasibilityReport feasible_check(double s, std::span<const double> z,
                                 const ProjectionProblem& p);

}  // namespace dersim
