#pragma once

#include <span>
#include <vector>

#include "dersim/histogram_window.hpp"

namespace dersim {

// Quadratic surrogate of the window mutual information as a function of the
// current sample's fractional y-bin weights z. The incoming sample perturbs
// the smoothed estimate by z_j/D in row i* (and in the y-marginal); expanding
// pairwise p*log2(p) terms to second order around the window estimate, with
// the x-marginal held at its window value, gives
//   I~(z) = const_term + sum_j (beta_j z_j + alpha_j z_j^2).
// alpha_j > 0 whenever m > 1, so I~ is strictly convex in z; for m = 1 the
// joint row equals the y-marginal and I~ collapses to a constant.
struct MiProxyCoefficients {
  int m = 0, n = 0;
  int i_star = 0;            // 1-based x-bin of the current sample
  double s_weight = 0.0;     // 1/D, the new sample's probability weight
  double const_term = 0.0;   // plug-in MI of the smoothed window estimate
  std::vector<double> a;     // m x n: log2 of the smoothed joint
  std::vector<double> b;     // n: log2 of the y-marginal
  std::vector<double> c;     // m: log2 of the x-marginal
  std::vector<double> beta;  // n: linear terms, s*(a[i*,j] - b[j])
  std::vector<double> alpha; // n: curvature, s^2 (1/p[i*,j] - 1/py[j]) / (2 ln 2)
};

MiProxyCoefficients mi_proxy_coefficients(const PdfEstimates& pdf, int i_star);

double mi_proxy_value(const MiProxyCoefficients& k, std::span<const double> z_row);

// d I~ / d z_j = beta_j + 2 alpha_j z_j.
std::vector<double> mi_proxy_gradient(const MiProxyCoefficients& k,
                                      std::span<const double> z_row);

}  // namespace dersim
