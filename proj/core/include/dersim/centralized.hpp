#pragma once

#include <span>
#include <vector>

#include "dersim/controller.hpp"
#include "dersim/core_model.hpp"
#include "dersim/mi_proxy.hpp"

namespace dersim {

// One household's data for a full-information solve: perfect load, current
// flag and SoC, and the MI constants at the load's x-bin. dt_h is the horizon
// the solution will be held for, so the SoC bound survives every tick of it.
struct HouseholdBlock {
  const HouseholdConfig* house = nullptr;
  double x_kw = 0.0;
  double y_ref_kw = 0.0;
  bool charging = true;
  double soc_kwh = 0.0;
  double dt_h = 5.0 / 3600.0;
  MiProxyCoefficients coeffs;
};

struct BlockSolution {
  double s = 0.0;  // rate in the flag direction
  double y = 0.0;
  std::vector<double> z;
  // True when the block optimum pins s at 0 while the objective pushes the
  // rate negative: the flag-restricted analogue of a negative interim target.
  bool wants_flip = false;
};

struct CentralizedSolution {
  std::vector<BlockSolution> blocks;
  double objective = 0.0;
  double kkt_residual = 0.0;
  int sweeps = 0;
};

// Full coupled objective at a candidate point:
//   sum_l [ (y_l - y_ref_l)^2 + mu_l I~_l(z_l) ]
//   + sigma1/2 (sum_l y_l - y_bar)^2 + sigma2/2 sum_l (s_l^2 + |z_l|^2).
double coupled_objective(std::span<const HouseholdBlock> blocks, double y_bar,
                         const ControllerCoefficients& k,
                         std::span<const BlockSolution> sol);

// Exact two-stage solve. Blocks couple only through the aggregate, so a
// scalar-price stage splits the problem first: at a fixed price the blocks
// are independent feasible-set QPs, and aggregate consistency is the root
// of an increasing piecewise-linear equation in the price, found by a
// guarded secant in a handful of block rounds. Cyclic exact block sweeps
// (each followed by an exact line search along the sweep displacement,
// feasibility kept by a ratio test) then certify the point and polish any
// residual the root search left. Stops when the projected-gradient KKT
// residual clears `kkt_tol`; throws if the combined round budget
// `max_sweeps` runs out first. A non-empty `warm` (one entry per block,
// e.g. the previous window's solution) is projected onto each block's
// feasible set and used as the starting point.
CentralizedSolution solve_block_descent(std::span<const HouseholdBlock> blocks,
                                        double y_bar, const ControllerCoefficients& k,
                                        int max_sweeps, double kkt_tol,
                                        std::span<const BlockSolution> warm = {});

// Standard-tolerance wrapper: KKT residual certified <= 1e-8.
CentralizedSolution solve_centralized(std::span<const HouseholdBlock> blocks,
                                      double y_bar, const ControllerCoefficients& k);

}  // namespace dersim
