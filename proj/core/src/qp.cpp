#include "dersim/qp.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>

namespace dersim {

void ConstraintSet::add_eq(std::span<const double> row, double rhs) {
  if (static_cast<int>(row.size()) != dim)
    throw std::invalid_argument("constraint row length mismatch");
  eq_a.insert(eq_a.end(), row.begin(), row.end());
  eq_b.push_back(rhs);
}

void ConstraintSet::add_ineq(std::span<const double> row, double rhs) {
  if (static_cast<int>(row.size()) != dim)
    throw std::invalid_argument("constraint row length mismatch");
  ineq_a.insert(ineq_a.end(), row.begin(), row.end());
  ineq_b.push_back(rhs);
}

namespace {

constexpr double kFeasTol = 1e-9;
constexpr double kStepTol = 1e-12;
constexpr double kMultTol = 1e-11;
constexpr int kMaxIter = 400;

// Gaussian elimination with partial pivoting on an s x s system, in place.
// Returns false if the pivot collapses (dependent active rows).
bool solve_dense(std::vector<double>& g, std::vector<double>& rhs, int s) {
  for (int col = 0; col < s; ++col) {
    int piv = col;
    double best = std::abs(g[static_cast<std::size_t>(col) * s + col]);
    for (int r = col + 1; r < s; ++r) {
      const double v = std::abs(g[static_cast<std::size_t>(r) * s + col]);
      if (v > best) {
        best = v;
        piv = r;
      }
    }
    if (best < 1e-13) return false;
    if (piv != col) {
      for (int k = col; k < s; ++k)
        std::swap(g[static_cast<std::size_t>(piv) * s + k], g[static_cast<std::size_t>(col) * s + k]);
      std::swap(rhs[piv], rhs[col]);
    }
    const double inv = 1.0 / g[static_cast<std::size_t>(col) * s + col];
    for (int r = col + 1; r < s; ++r) {
      const double f = g[static_cast<std::size_t>(r) * s + col] * inv;
      if (f == 0.0) continue;
      for (int k = col; k < s; ++k)
        g[static_cast<std::size_t>(r) * s + k] -= f * g[static_cast<std::size_t>(col) * s + k];
      rhs[r] -= f * rhs[col];
    }
  }
  for (int r = s - 1; r >= 0; --r) {
    double v = rhs[r];
    for (int k = r + 1; k < s; ++k) v -= g[static_cast<std::size_t>(r) * s + k] * rhs[k];
    rhs[r] = v / g[static_cast<std::size_t>(r) * s + r];
  }
  return true;
}

struct Workset {
  const ConstraintSet& c;
  std::vector<int> active;  // inequality indices in the working set

  const double* eq_row(int r) const { return c.eq_a.data() + static_cast<std::size_t>(r) * c.dim; }
  const double* ineq_row(int r) const {
    return c.ineq_a.data() + static_cast<std::size_t>(r) * c.dim;
  }
  int rows() const { return c.n_eq() + static_cast<int>(active.size()); }
  const double* row(int k) const {
    return k < c.n_eq() ? eq_row(k) : ineq_row(active[static_cast<std::size_t>(k) - c.n_eq()]);
  }
  double rhs(int k) const {
    return k < c.n_eq() ? c.eq_b[k] : c.ineq_b[active[static_cast<std::size_t>(k) - c.n_eq()]];
  }

  // Least-distance EQP: u = u0 - C'lambda with (C C') lambda = C u0 - d.
  // Returns false when the Gram matrix is numerically singular.
  bool solve_eqp(std::span<const double> u0, std::vector<double>& u,
                 std::vector<double>& lambda) const {
    const int s = rows();
    const int d = c.dim;
    u.assign(u0.begin(), u0.end());
    lambda.assign(static_cast<std::size_t>(s), 0.0);
    if (s == 0) return true;
    std::vector<double> gram(static_cast<std::size_t>(s) * s);
    std::vector<double> r(static_cast<std::size_t>(s));
    for (int a = 0; a < s; ++a) {
      const double* ra = row(a);
      for (int b = a; b < s; ++b) {
        const double* rb = row(b);
        double dot = 0.0;
        for (int k = 0; k < d; ++k) dot += ra[k] * rb[k];
        gram[static_cast<std::size_t>(a) * s + b] = dot;
        gram[static_cast<std::size_t>(b) * s + a] = dot;
      }
      double dot = 0.0;
      for (int k = 0; k < d; ++k) dot += ra[k] * u0[k];
      r[a] = dot - rhs(a);
    }
    if (!solve_dense(gram, r, s)) return false;
    lambda = r;
    for (int a = 0; a < s; ++a) {
      const double* ra = row(a);
      for (int k = 0; k < d; ++k) u[k] -= lambda[a] * ra[k];
    }
    return true;
  }

  // True when `idx` is (numerically) a linear combination of the current
  // working-set rows, detected through the Gram residual.
  bool would_be_dependent(int idx) const {
    const int s = rows();
    if (s == 0) return false;
    const int d = c.dim;
    const double* a = ineq_row(idx);
    std::vector<double> gram(static_cast<std::size_t>(s) * s);
    std::vector<double> r(static_cast<std::size_t>(s));
    for (int p = 0; p < s; ++p) {
      const double* rp = row(p);
      for (int q = p; q < s; ++q) {
        const double* rq = row(q);
        double dot = 0.0;
        for (int k = 0; k < d; ++k) dot += rp[k] * rq[k];
        gram[static_cast<std::size_t>(p) * s + q] = dot;
        gram[static_cast<std::size_t>(q) * s + p] = dot;
      }
      double dot = 0.0;
      for (int k = 0; k < d; ++k) dot += rp[k] * a[k];
      r[p] = dot;
    }
    if (!solve_dense(gram, r, s)) return true;
    double res = 0.0, norm = 0.0;
    for (int k = 0; k < d; ++k) {
      double v = a[k];
      for (int p = 0; p < s; ++p) v -= r[p] * row(p)[k];
      res += v * v;
      norm += a[k] * a[k];
    }
    // The squared residual is the Gram pivot this row would contribute, so
    // the cutoff must clear solve_dense's 1e-13 pivot floor with margin.
    return res <= 1e-12 * std::max(norm, 1.0);
  }
};

double dot_n(const double* a, const double* b, int n) {
  double v = 0.0;
  for (int k = 0; k < n; ++k) v += a[k] * b[k];
  return v;
}

double kkt_residual(const ConstraintSet& c, std::span<const double> u0,
                    const QpResult& res) {
  const int d = c.dim;
  double worst = 0.0;
  // Stationarity: u - u0 + E'nu + A'lambda = 0.
  for (int k = 0; k < d; ++k) {
    double v = res.u[k] - u0[k];
    for (int r = 0; r < c.n_eq(); ++r)
      v += res.eq_mult[r] * c.eq_a[static_cast<std::size_t>(r) * d + k];
    for (int r = 0; r < c.n_ineq(); ++r)
      v += res.ineq_mult[r] * c.ineq_a[static_cast<std::size_t>(r) * d + k];
    worst = std::max(worst, std::abs(v));
  }
  for (int r = 0; r < c.n_eq(); ++r) {
    const double g = dot_n(c.eq_a.data() + static_cast<std::size_t>(r) * d, res.u.data(), d);
    worst = std::max(worst, std::abs(g - c.eq_b[r]));
  }
  for (int r = 0; r < c.n_ineq(); ++r) {
    const double g = dot_n(c.ineq_a.data() + static_cast<std::size_t>(r) * d, res.u.data(), d);
    worst = std::max(worst, g - c.ineq_b[r]);                       // primal
    worst = std::max(worst, -res.ineq_mult[r]);                     // dual sign
    worst = std::max(worst, std::abs(res.ineq_mult[r] * (g - c.ineq_b[r])));  // compl.
  }
  return worst;
}

}  // namespace

QpResult project_point(const ConstraintSet& c, std::span<const double> u0,
                       std::span<const double> start) {
  const int d = c.dim;
  if (static_cast<int>(u0.size()) != d || static_cast<int>(start.size()) != d)
    throw std::invalid_argument("project_point: dimension mismatch");

  // Unit-norm rows: Gram systems, dependence tests, and the feasibility
  // tolerances then sit on one scale no matter how the caller scaled the
  // rows (the diag-QP wrapper can stretch them by orders of magnitude).
  // Multipliers are mapped back to the caller's rows at the end.
  ConstraintSet nc(d);
  nc.eq_a = c.eq_a;
  nc.eq_b = c.eq_b;
  nc.ineq_a = c.ineq_a;
  nc.ineq_b = c.ineq_b;
  std::vector<double> eq_nrm(static_cast<std::size_t>(c.n_eq()), 1.0);
  std::vector<double> ineq_nrm(static_cast<std::size_t>(c.n_ineq()), 1.0);
  for (int r = 0; r < c.n_eq(); ++r) {
    double* a = nc.eq_a.data() + static_cast<std::size_t>(r) * d;
    const double nrm = std::sqrt(dot_n(a, a, d));
    if (nrm > 0.0) {
      eq_nrm[static_cast<std::size_t>(r)] = nrm;
      for (int k = 0; k < d; ++k) a[k] /= nrm;
      nc.eq_b[static_cast<std::size_t>(r)] /= nrm;
    }
  }
  for (int r = 0; r < c.n_ineq(); ++r) {
    double* a = nc.ineq_a.data() + static_cast<std::size_t>(r) * d;
    const double nrm = std::sqrt(dot_n(a, a, d));
    if (nrm > 0.0) {
      ineq_nrm[static_cast<std::size_t>(r)] = nrm;
      for (int k = 0; k < d; ++k) a[k] /= nrm;
      nc.ineq_b[static_cast<std::size_t>(r)] /= nrm;
    }
  }

  std::vector<double> x(start.begin(), start.end());
  for (int r = 0; r < nc.n_eq(); ++r) {
    const double g = dot_n(nc.eq_a.data() + static_cast<std::size_t>(r) * d, x.data(), d);
    if (std::abs(g - nc.eq_b[r]) > kFeasTol)
      throw std::invalid_argument("project_point: start violates an equality");
  }
  for (int r = 0; r < nc.n_ineq(); ++r) {
    const double g = dot_n(nc.ineq_a.data() + static_cast<std::size_t>(r) * d, x.data(), d);
    if (g - nc.ineq_b[r] > kFeasTol)
      throw std::invalid_argument("project_point: start violates an inequality");
  }

  Workset ws{nc, {}};
  std::vector<double> u, lambda;
  std::vector<char> in_w(static_cast<std::size_t>(c.n_ineq()), 0);

  int iter = 0;
  for (; iter < kMaxIter; ++iter) {
    if (!ws.solve_eqp(u0, u, lambda))
      throw std::runtime_error("project_point: singular working set");

    double step = 0.0;
    for (int k = 0; k < d; ++k) step = std::max(step, std::abs(u[k] - x[k]));

    if (step <= kStepTol) {
      // At the EQP minimizer: drop the most negative inequality multiplier,
      // or stop if dual feasible.
      int drop = -1;
      double most_neg = -kMultTol;
      for (std::size_t a = 0; a < ws.active.size(); ++a) {
        const double l = lambda[static_cast<std::size_t>(c.n_eq()) + a];
        if (l < most_neg) {
          most_neg = l;
          drop = static_cast<int>(a);
        }
      }
      if (drop < 0) break;
      in_w[ws.active[drop]] = 0;
      ws.active.erase(ws.active.begin() + drop);
      continue;
    }

    // Ratio test toward the EQP minimizer.
    double alpha = 1.0;
    int blocker = -1;
    for (int r = 0; r < nc.n_ineq(); ++r) {
      if (in_w[r]) continue;
      const double* a = nc.ineq_a.data() + static_cast<std::size_t>(r) * d;
      double adir = 0.0;
      for (int k = 0; k < d; ++k) adir += a[k] * (u[k] - x[k]);
      if (adir <= kStepTol) continue;
      const double slack = nc.ineq_b[r] - dot_n(a, x.data(), d);
      const double t = std::max(slack, 0.0) / adir;
      if (t < alpha) {
        alpha = t;
        blocker = r;
      }
    }
    for (int k = 0; k < d; ++k) x[k] += alpha * (u[k] - x[k]);
    if (blocker >= 0) {
      if (ws.would_be_dependent(blocker)) {
        // Degenerate face: make room by dropping the most negative multiplier;
        // with none negative the blocked EQP direction cannot improve.
        int drop = -1;
        double most_neg = -kMultTol;
        for (std::size_t a = 0; a < ws.active.size(); ++a) {
          const double l = lambda[static_cast<std::size_t>(c.n_eq()) + a];
          if (l < most_neg) {
            most_neg = l;
            drop = static_cast<int>(a);
          }
        }
        if (drop < 0) break;
        in_w[ws.active[drop]] = 0;
        ws.active.erase(ws.active.begin() + drop);
      } else {
        ws.active.push_back(blocker);
        in_w[blocker] = 1;
      }
    }
  }
  if (iter >= kMaxIter) throw std::runtime_error("project_point: iteration limit hit");

  QpResult res;
  res.u = x;
  res.iterations = iter + 1;
  res.eq_mult.assign(static_cast<std::size_t>(c.n_eq()), 0.0);
  res.ineq_mult.assign(static_cast<std::size_t>(c.n_ineq()), 0.0);
  for (int r = 0; r < c.n_eq(); ++r)
    res.eq_mult[r] = lambda[r] / eq_nrm[static_cast<std::size_t>(r)];
  for (std::size_t a = 0; a < ws.active.size(); ++a)
    res.ineq_mult[ws.active[a]] = std::max(lambda[static_cast<std::size_t>(c.n_eq()) + a], 0.0) /
                                  ineq_nrm[static_cast<std::size_t>(ws.active[a])];
  res.kkt_residual = kkt_residual(c, u0, res);
  return res;
}

QpResult minimize_diag_qp(const ConstraintSet& c, std::span<const double> h,
                          std::span<const double> g, std::span<const double> start) {
  const int d = c.dim;
  if (static_cast<int>(h.size()) != d || static_cast<int>(g.size()) != d ||
      static_cast<int>(start.size()) != d)
    throw std::invalid_argument("minimize_diag_qp: dimension mismatch");
  std::vector<double> scale(d);
  for (int k = 0; k < d; ++k) {
    if (!(h[k] > 0.0)) throw std::invalid_argument("minimize_diag_qp: curvature must be positive");
    scale[k] = std::sqrt(h[k]);
  }

  // v = diag(scale) u turns the objective into 0.5|v - v0|^2 with
  // v0 = -g/scale; row scaling keeps the multipliers unchanged.
  ConstraintSet sc(d);
  sc.eq_b = c.eq_b;
  sc.ineq_b = c.ineq_b;
  sc.eq_a.resize(c.eq_a.size());
  sc.ineq_a.resize(c.ineq_a.size());
  for (int r = 0; r < c.n_eq(); ++r)
    for (int k = 0; k < d; ++k)
      sc.eq_a[static_cast<std::size_t>(r) * d + k] =
          c.eq_a[static_cast<std::size_t>(r) * d + k] / scale[k];
  for (int r = 0; r < c.n_ineq(); ++r)
    for (int k = 0; k < d; ++k)
      sc.ineq_a[static_cast<std::size_t>(r) * d + k] =
          c.ineq_a[static_cast<std::size_t>(r) * d + k] / scale[k];

  std::vector<double> v0(d), vstart(d);
  for (int k = 0; k < d; ++k) {
    v0[k] = -g[k] / scale[k];
    vstart[k] = start[k] * scale[k];
  }

  QpResult res = project_point(sc, v0, vstart);
  for (int k = 0; k < d; ++k) res.u[k] /= scale[k];

  // Recompute the certificate in the original variables.
  double worst = 0.0;
  for (int k = 0; k < d; ++k) {
    double v = h[k] * res.u[k] + g[k];
    for (int r = 0; r < c.n_eq(); ++r)
      v += res.eq_mult[r] * c.eq_a[static_cast<std::size_t>(r) * d + k];
    for (int r = 0; r < c.n_ineq(); ++r)
      v += res.ineq_mult[r] * c.ineq_a[static_cast<std::size_t>(r) * d + k];
    worst = std::max(worst, std::abs(v));
  }
  for (int r = 0; r < c.n_eq(); ++r) {
    double gv = 0.0;
    for (int k = 0; k < d; ++k) gv += c.eq_a[static_cast<std::size_t>(r) * d + k] * res.u[k];
    worst = std::max(worst, std::abs(gv - c.eq_b[r]));
  }
  for (int r = 0; r < c.n_ineq(); ++r) {
    double gv = 0.0;
    for (int k = 0; k < d; ++k) gv += c.ineq_a[static_cast<std::size_t>(r) * d + k] * res.u[k];
    worst = std::max(worst, gv - c.ineq_b[r]);
    worst = std::max(worst, std::abs(res.ineq_mult[r] * (gv - c.ineq_b[r])));
  }
  res.kkt_residual = worst;
  return res;
}

}  // namespace dersim
