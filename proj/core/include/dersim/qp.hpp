#pragma once

#include <span>
#include <vector>

namespace dersim {

// Dense constraint block for a handful of variables: E u = f rows first,
// A u <= b rows second, both stored row-major. Sized for problems with at
// most a few dozen rows; no sparsity, no factor reuse.
struct ConstraintSet {
  int dim = 0;
  std::vector<double> eq_a;
  std::vector<double> eq_b;
  std::vector<double> ineq_a;
  std::vector<double> ineq_b;

  explicit ConstraintSet(int d) : dim(d) {}
  int n_eq() const { return static_cast<int>(eq_b.size()); }
  int n_ineq() const { return static_cast<int>(ineq_b.size()); }
  void add_eq(std::span<const double> row, double rhs);
  void add_ineq(std::span<const double> row, double rhs);
};

struct QpResult {
  std::vector<double> u;
  std::vector<double> eq_mult;    // one per equality row
  std::vector<double> ineq_mult;  // one per inequality row, >= 0, 0 if inactive
  double kkt_residual = 0.0;      // max of stationarity/primal/dual/compl. terms
  int iterations = 0;
};

// Euclidean projection of u0 onto {E u = f, A u <= b} by a primal active-set
// method. `start` must be feasible (checked to 1e-9); active working sets are
// kept linearly independent, so degenerate boxes (identical lower and upper
// rows) must be posed as equalities by the caller. Throws on infeasible start
// or iteration blow-up.
QpResult project_point(const ConstraintSet& c, std::span<const double> u0,
                       std::span<const double> start);

// min 0.5 u' diag(h) u + g'u over the same set, h > 0 elementwise, via
// variable scaling to least-distance form. Multipliers are reported in the
// original space.
QpResult minimize_diag_qp(const ConstraintSet& c, std::span<const double> h,
                          std::span<const double> g, std::span<const double> start);

}  // namespace dersim
