#include "dersim/centralized.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "dersim/projection.hpp"
#include "dersim/qp.hpp"
#include "feasible_set.hpp"

namespace dersim {

namespace {

constexpr double kDispTol = 1e-11;    // sweep displacement that triggers a KKT check
constexpr int kCertEvery = 20;        // periodic KKT check cadence, sweeps
constexpr double kFlipGradTol = 1e-7; // rate gradient that counts as pressing on s = 0
// Extrapolation cap: equality rows are satisfied to fp error at both sweep
// endpoints, so theta must stay small enough that theta * residual clears the
// 1e-9 feasible-start tolerance of the block QPs.
constexpr double kThetaCap = 1e4;

ProjectionProblem block_problem(const HouseholdBlock& b) {
  ProjectionProblem p;
  p.charging = b.charging;
  p.x_hat = b.x_kw;
  p.soc_kwh = b.soc_kwh;
  p.battery = b.house->battery;
  p.grid = b.house->grid;
  p.y_min = b.house->y_min_kw;
  p.y_max = b.house->y_max_kw;
  p.dt_h = b.dt_h;
  return p;
}

struct BlockWork {
  detail::FeasibleSet fs;
  std::vector<double> u;  // current block point, fs.dim()
  double s = 0.0;         // mirrors u[0] or fs.s_value
  double y = 0.0;         // x + dir * s
};

void sync_point(const HouseholdBlock& b, BlockWork& w) {
  w.s = w.fs.s_fixed ? w.fs.s_value : w.u[0];
  w.y = b.x_kw + w.fs.dir * w.s;
}

// Gradient of the coupled objective w.r.t. one block's variables, other
// blocks fixed; sum_y is the aggregate the gradient is taken at.
void block_gradient(const HouseholdBlock& b, const detail::FeasibleSet& fs,
                    std::span<const double> u, const ControllerCoefficients& k,
                    double sum_y, double y_bar, std::vector<double>& grad) {
  grad.assign(u.size(), 0.0);
  const double mu = b.house->mu;
  int off = 0;
  if (!fs.s_fixed) {
    const double y = b.x_kw + fs.dir * u[0];
    grad[0] = 2.0 * fs.dir * (y - b.y_ref_kw) + k.sigma1 * fs.dir * (sum_y - y_bar) +
              k.sigma2 * u[0];
    off = 1;
  }
  for (int j = 0; j < fs.n; ++j) {
    const double zj = u[static_cast<std::size_t>(off + j)];
    grad[static_cast<std::size_t>(off + j)] =
        mu * (b.coeffs.beta[static_cast<std::size_t>(j)] +
              2.0 * b.coeffs.alpha[static_cast<std::size_t>(j)] * zj) +
        k.sigma2 * zj;
  }
}

double objective_at(std::span<const HouseholdBlock> blocks, std::span<const BlockWork> work,
                    double y_bar, const ControllerCoefficients& k) {
  double f = 0.0, sum_y = 0.0;
  for (std::size_t l = 0; l < blocks.size(); ++l) {
    const HouseholdBlock& b = blocks[l];
    const BlockWork& w = work[l];
    const std::size_t off = w.fs.s_fixed ? 0 : 1;
    const std::span<const double> z(w.u.data() + off, static_cast<std::size_t>(w.fs.n));
    double zsq = 0.0;
    for (double v : z) zsq += v * v;
    f += (w.y - b.y_ref_kw) * (w.y - b.y_ref_kw) +
         b.house->mu * mi_proxy_value(b.coeffs, z) + 0.5 * k.sigma2 * (w.s * w.s + zsq);
    sum_y += w.y;
  }
  f += 0.5 * k.sigma1 * (sum_y - y_bar) * (sum_y - y_bar);
  return f;
}

// Projected-gradient fixed-point residual, elementwise over every block,
// taken at the true current aggregate.
double kkt_certificate(std::span<const HouseholdBlock> blocks, std::span<const BlockWork> work,
                       const ControllerCoefficients& k, double y_bar, double sum_y) {
  double worst = 0.0;
  std::vector<double> grad, v;
  for (std::size_t l = 0; l < blocks.size(); ++l) {
    const BlockWork& w = work[l];
    block_gradient(blocks[l], w.fs, w.u, k, sum_y, y_bar, grad);
    v.resize(w.u.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = w.u[i] - grad[i];
    const QpResult qr = project_point(w.fs.rows, v, w.u);
    for (std::size_t i = 0; i < v.size(); ++i)
      worst = std::max(worst, std::abs(w.u[i] - qr.u[i]));
  }
  return worst;
}

}  // namespace

double coupled_objective(std::span<const HouseholdBlock> blocks, double y_bar,
                         const ControllerCoefficients& k,
                         std::span<const BlockSolution> sol) {
  if (sol.size() != blocks.size())
    throw std::invalid_argument("centralized: solution size does not match blocks");
  double f = 0.0, sum_y = 0.0;
  for (std::size_t l = 0; l < blocks.size(); ++l) {
    const HouseholdBlock& b = blocks[l];
    const BlockSolution& s = sol[l];
    const int dir = b.charging ? 1 : -1;
    const double y = b.x_kw + dir * s.s;
    double zsq = 0.0;
    for (double v : s.z) zsq += v * v;
    f += (y - b.y_ref_kw) * (y - b.y_ref_kw) + b.house->mu * mi_proxy_value(b.coeffs, s.z) +
         0.5 * k.sigma2 * (s.s * s.s + zsq);
    sum_y += y;
  }
  f += 0.5 * k.sigma1 * (sum_y - y_bar) * (sum_y - y_bar);
  return f;
}

CentralizedSolution solve_block_descent(std::span<const HouseholdBlock> blocks, double y_bar,
                                        const ControllerCoefficients& k, int max_sweeps,
                                        double kkt_tol, std::span<const BlockSolution> warm) {
  if (blocks.empty()) throw std::invalid_argument("centralized: no blocks");
  if (!warm.empty() && warm.size() != blocks.size())
    throw std::invalid_argument("centralized: warm start size does not match blocks");
  k.validate();
  if (!std::isfinite(y_bar)) throw std::invalid_argument("centralized: target not finite");
  if (max_sweeps < 1) throw std::invalid_argument("centralized: max_sweeps must be >= 1");
  if (!(kkt_tol > 0.0)) throw std::invalid_argument("centralized: kkt_tol must be positive");
  for (const HouseholdBlock& b : blocks) {
    if (!b.house) throw std::invalid_argument("centralized: null household");
    b.house->validate();
    if (!std::isfinite(b.x_kw) || !std::isfinite(b.y_ref_kw))
      throw std::invalid_argument("centralized: load or reference not finite");
    if (!(b.dt_h > 0.0)) throw std::invalid_argument("centralized: hold duration must be positive");
    const int n = b.house->grid.n();
    if (b.coeffs.n != n || static_cast<int>(b.coeffs.beta.size()) != n ||
        static_cast<int>(b.coeffs.alpha.size()) != n)
      throw std::invalid_argument("centralized: proxy coefficients do not match the y-grid");
  }

  const std::size_t nb = blocks.size();
  std::vector<ProjectionProblem> probs(nb);
  std::vector<BlockWork> work(nb);
  double sum_y = 0.0;
  for (std::size_t l = 0; l < nb; ++l) {
    probs[l] = block_problem(blocks[l]);
    work[l].fs = detail::build_feasible_set(probs[l]);
    work[l].u = detail::feasible_start(probs[l], work[l].fs, 0.0);
    if (!warm.empty()) {
      // Pull the previous solution into the new feasible set; consecutive
      // problems barely move, so this collapses the sweep count.
      const int n = blocks[l].house->grid.n();
      if (static_cast<int>(warm[l].z.size()) == n) {
        std::vector<double> u0;
        u0.reserve(static_cast<std::size_t>(work[l].fs.dim()));
        if (!work[l].fs.s_fixed) u0.push_back(warm[l].s);
        u0.insert(u0.end(), warm[l].z.begin(), warm[l].z.end());
        work[l].u = project_point(work[l].fs.rows, u0, work[l].u).u;
      }
    }
    sync_point(blocks[l], work[l]);
    sum_y += work[l].y;
  }

  std::vector<std::vector<double>> u_old(nb), u_sweep(nb);
  std::vector<double> h, g, grad;
  int sweeps_done = 0;

  // Per-block QP coefficients; the rate row comes from the caller, the z
  // rows depend only on the proxy constants.
  const auto fill_block_qp = [&](const HouseholdBlock& b, const detail::FeasibleSet& fs,
                                 double s_h, double s_g) {
    const std::size_t dim = static_cast<std::size_t>(fs.dim());
    h.assign(dim, 0.0);
    g.assign(dim, 0.0);
    std::size_t off = 0;
    if (!fs.s_fixed) {
      h[0] = s_h;
      g[0] = s_g;
      off = 1;
    }
    const double mu = b.house->mu;
    for (int j = 0; j < fs.n; ++j) {
      h[off + static_cast<std::size_t>(j)] =
          std::max(2.0 * mu * b.coeffs.alpha[static_cast<std::size_t>(j)] + k.sigma2, 1e-12);
      g[off + static_cast<std::size_t>(j)] = mu * b.coeffs.beta[static_cast<std::size_t>(j)];
    }
  };

  // Aggregate-price stage. Blocks touch each other only through T = sum_y in
  // sigma1/2 (T - y_bar)^2, so at a fixed price lam the problem splits into
  // independent block QPs with lam folded into the rate's linear term.
  // phi(lam) = lam - sigma1 (T(lam) - y_bar) is increasing with slope >= 1
  // (T is non-increasing in lam), so lam - phi(lam) always lands on the far
  // side of the root: the first step brackets, a guarded secant finishes, and
  // phi is piecewise linear so the iteration is effectively finite. One
  // evaluation costs one sweep; plain sweeps need hundreds to damp the same
  // aggregate mode whenever the problem shifts between solves.
  int dual_evals = 0;
  const int dual_budget = std::min(max_sweeps - 1, 64);
  const auto eval_phi = [&](double lam) {
    double total = 0.0;
    for (std::size_t l = 0; l < nb; ++l) {
      const HouseholdBlock& b = blocks[l];
      BlockWork& w = work[l];
      fill_block_qp(b, w.fs, 2.0 + k.sigma2,
                    2.0 * w.fs.dir * (b.x_kw - b.y_ref_kw) + lam * w.fs.dir);
      QpResult qr = minimize_diag_qp(w.fs.rows, h, g, w.u);
      w.u = std::move(qr.u);
      sync_point(b, w);
      total += w.y;
    }
    sum_y = total;
    ++dual_evals;
    return lam - k.sigma1 * (sum_y - y_bar);
  };
  if (dual_budget >= 2) {
    // The consistent aggregate lies between the vertexwise extremes of the
    // block load ranges, so the price root lies in the matching interval;
    // clamping candidates to it keeps the bracket step off absurd prices
    // that would pin every block at a degenerate vertex.
    double t_lo = 0.0, t_hi = 0.0;
    for (std::size_t l = 0; l < nb; ++l) {
      const detail::FeasibleSet& fs = work[l].fs;
      const double x = blocks[l].x_kw;
      if (fs.s_fixed) {
        t_lo += x + fs.dir * fs.s_value;
        t_hi += x + fs.dir * fs.s_value;
      } else if (fs.dir > 0) {
        t_lo += x + fs.s_lo;
        t_hi += x + fs.s_hi;
      } else {
        t_lo += x - fs.s_hi;
        t_hi += x - fs.s_lo;
      }
    }
    const double lam_lo = k.sigma1 * (t_lo - y_bar);
    const double lam_hi = k.sigma1 * (t_hi - y_bar);
    // The price residual feeds the block gradients one for one, so clearing
    // a fraction of kkt_tol keeps the certificate below decisive.
    const double phi_tol = 0.25 * kkt_tol;
    const double la = std::clamp(k.sigma1 * (sum_y - y_bar), lam_lo, lam_hi);
    const double fa = eval_phi(la);
    if (std::abs(fa) > phi_tol) {
      const double lb = std::clamp(la - fa, lam_lo, lam_hi);
      const double fb = eval_phi(lb);
      double lo = la, flo = fa, hi = lb, fhi = fb;
      if (flo > fhi) {
        std::swap(lo, hi);
        std::swap(flo, fhi);
      }
      if (flo <= 0.0 && fhi >= 0.0) {
        double fcur = std::abs(flo) < std::abs(fhi) ? flo : fhi;
        int side = 0;
        while (std::abs(fcur) > phi_tol && dual_evals < dual_budget && lo < hi) {
          double mid = hi - fhi * (hi - lo) / (fhi - flo);
          if (!(mid > lo && mid < hi)) mid = 0.5 * (lo + hi);
          fcur = eval_phi(mid);
          if (fcur > 0.0) {
            if (side > 0) flo *= 0.5;  // stuck-end guard
            hi = mid;
            fhi = fcur;
            side = 1;
          } else if (fcur < 0.0) {
            if (side < 0) fhi *= 0.5;
            lo = mid;
            flo = fcur;
            side = -1;
          } else {
            break;
          }
        }
      }
    }
  }
  sweeps_done = dual_evals;

  double f_cur = objective_at(blocks, work, y_bar, k);
  double last_res = std::numeric_limits<double>::infinity();
  if (dual_evals > 0) last_res = kkt_certificate(blocks, work, k, y_bar, sum_y);
  // Sweep stage: certifies the price point and polishes whatever residual
  // the root search left; from a converged price it does not run at all.
  const int loop_budget = last_res <= kkt_tol ? 0 : max_sweeps - dual_evals;
  for (int sweep = 1; sweep <= loop_budget; ++sweep) {
    sweeps_done = dual_evals + sweep;
    const double total_old = sum_y;
    const double f_old = f_cur;
    for (std::size_t l = 0; l < nb; ++l) u_old[l] = work[l].u;

    // Exact block minimizations, aggregate refreshed after every block.
    for (std::size_t l = 0; l < nb; ++l) {
      const HouseholdBlock& b = blocks[l];
      BlockWork& w = work[l];
      const double y_rest = sum_y - w.y;
      fill_block_qp(b, w.fs, 2.0 + k.sigma1 + k.sigma2,
                    2.0 * w.fs.dir * (b.x_kw - b.y_ref_kw) +
                        k.sigma1 * w.fs.dir * (y_rest + b.x_kw - y_bar));
      QpResult qr = minimize_diag_qp(w.fs.rows, h, g, w.u);
      const double y_was = w.y;
      w.u = std::move(qr.u);
      sync_point(b, w);
      sum_y += w.y - y_was;
    }
    double f_new = objective_at(blocks, work, y_bar, k);

    // Exact line search along the sweep displacement. The aggregate couples
    // the blocks through a single rank-one mode that plain sweeps damp
    // slowly; minimizing the quadratic along the whole-sweep direction kills
    // it. Equality rows are invariant along the direction, inequalities are
    // ratio-tested from the old point.
    double q0 = 0.0;
    for (std::size_t l = 0; l < nb; ++l) {
      block_gradient(blocks[l], work[l].fs, u_old[l], k, total_old, y_bar, grad);
      for (std::size_t i = 0; i < grad.size(); ++i)
        q0 += grad[i] * (work[l].u[i] - u_old[l][i]);
    }
    const double curv = 2.0 * (f_new - f_old - q0);
    double theta = 1.0;
    if (q0 < 0.0 && curv > 0.0) {
      const double theta_star = -q0 / curv;
      if (theta_star > 1.0) {
        double theta_max = kThetaCap;
        for (std::size_t l = 0; l < nb; ++l) {
          const ConstraintSet& c = work[l].fs.rows;
          const std::size_t d = static_cast<std::size_t>(c.dim);
          for (int r = 0; r < c.n_ineq(); ++r) {
            double au = 0.0, ad = 0.0;
            for (std::size_t i = 0; i < d; ++i) {
              const double a = c.ineq_a[static_cast<std::size_t>(r) * d + i];
              au += a * u_old[l][i];
              ad += a * (work[l].u[i] - u_old[l][i]);
            }
            if (ad > 1e-14)
              theta_max = std::min(theta_max, std::max(0.0, c.ineq_b[static_cast<std::size_t>(r)] - au) / ad);
          }
        }
        theta = std::clamp(theta_star, 1.0, std::max(theta_max, 1.0));
      }
    }
    double disp = 0.0;
    if (theta > 1.0) {
      for (std::size_t l = 0; l < nb; ++l) u_sweep[l] = work[l].u;
      sum_y = 0.0;
      for (std::size_t l = 0; l < nb; ++l) {
        BlockWork& w = work[l];
        for (std::size_t i = 0; i < w.u.size(); ++i)
          w.u[i] = u_old[l][i] + theta * (w.u[i] - u_old[l][i]);
        sync_point(blocks[l], w);
        sum_y += w.y;
      }
      const double f_ext = objective_at(blocks, work, y_bar, k);
      if (f_ext <= f_new) {
        f_cur = f_ext;
      } else {
        // Noise-driven step size; fall back to the plain sweep point.
        theta = 1.0;
        sum_y = 0.0;
        for (std::size_t l = 0; l < nb; ++l) {
          work[l].u = std::move(u_sweep[l]);
          sync_point(blocks[l], work[l]);
          sum_y += work[l].y;
        }
        f_cur = f_new;
      }
    } else {
      f_cur = f_new;
    }
    for (std::size_t l = 0; l < nb; ++l)
      for (std::size_t i = 0; i < work[l].u.size(); ++i)
        disp = std::max(disp, std::abs(work[l].u[i] - u_old[l][i]));

    if (disp <= kDispTol || sweep % kCertEvery == 0 || sweep == loop_budget) {
      last_res = kkt_certificate(blocks, work, k, y_bar, sum_y);
      if (last_res <= kkt_tol) break;
      if (sweep == loop_budget) {
        std::ostringstream os;
        os << "centralized: block descent failed to certify KKT <= " << kkt_tol << " within "
           << max_sweeps << " sweeps (last residual " << last_res << ")";
        throw std::runtime_error(os.str());
      }
    }
  }

  CentralizedSolution out;
  out.sweeps = sweeps_done;
  out.kkt_residual = last_res;
  out.objective = f_cur;
  out.blocks.resize(nb);
  for (std::size_t l = 0; l < nb; ++l) {
    const HouseholdBlock& b = blocks[l];
    const BlockWork& w = work[l];
    BlockSolution& bs = out.blocks[l];
    bs.s = w.s;
    bs.y = w.y;
    const std::size_t off = w.fs.s_fixed ? 0 : 1;
    bs.z.assign(w.u.begin() + static_cast<std::ptrdiff_t>(off), w.u.end());
    const double gs = 2.0 * w.fs.dir * (w.y - b.y_ref_kw) +
                      k.sigma1 * w.fs.dir * (sum_y - y_bar) + k.sigma2 * w.s;
    bs.wants_flip = bs.s <= 1e-12 && gs > kFlipGradTol;
  }
  return out;
}

CentralizedSolution solve_centralized(std::span<const HouseholdBlock> blocks, double y_bar,
                                      const ControllerCoefficients& k) {
  return solve_block_descent(blocks, y_bar, k, 2000, 1e-8);
}

}  // namespace dersim
