#pragma once

// Internal: shared constraint assembly for the household feasible set, used
// by the projection module and the centralized block solver. Not installed.

#include <vector>

#include "dersim/projection.hpp"
#include "dersim/qp.hpp"

namespace dersim::detail {

struct FeasibleSet {
  ConstraintSet rows{0};  // over u = (s, z) when s is free, else over z alone
  bool s_fixed = false;
  double s_value = 0.0;  // meaningful when s_fixed
  double s_lo = 0.0, s_hi = 0.0;
  double delta = 0.0;
  int dir = 1;  // +1 charge, -1 discharge
  int n = 0;
  int dim() const { return s_fixed ? n : n + 1; }
};

// Builds the constraint rows for the problem's flag direction; throws the
// infeasibility error when the rate interval is empty. Degenerate intervals
// (width <= 1e-12) and hold_s_at_zero collapse to the z-only form.
FeasibleSet build_feasible_set(const ProjectionProblem& p);

// A strictly feasible point of matching dimension; s_pref is clamped into
// the rate interval when s is free.
std::vector<double> feasible_start(const ProjectionProblem& p, const FeasibleSet& fs,
                                   double s_pref);

}  // namespace dersim::detail
