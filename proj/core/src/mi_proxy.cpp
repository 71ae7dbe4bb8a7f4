#include "dersim/mi_proxy.hpp"

#include <cmath>
#include <stdexcept>

namespace dersim {

namespace {
constexpr double kLn2 = 0.69314718055994530941723212145818;
}

MiProxyCoefficients mi_proxy_coefficients(const PdfEstimates& pdf, int i_star) {
  if (i_star < 1 || i_star > pdf.m)
    throw std::invalid_argument("mi_proxy_coefficients: i* out of range");

  MiProxyCoefficients k;
  k.m = pdf.m;
  k.n = pdf.n;
  k.i_star = i_star;
  k.s_weight = 1.0 / pdf.d;

  k.a.resize(pdf.p.size());
  for (std::size_t idx = 0; idx < pdf.p.size(); ++idx) k.a[idx] = std::log2(pdf.p[idx]);
  k.b.resize(pdf.n);
  for (int j = 0; j < pdf.n; ++j) k.b[j] = std::log2(pdf.py[j]);
  k.c.resize(pdf.m);
  for (int i = 0; i < pdf.m; ++i) k.c[i] = std::log2(pdf.px[i]);

  // Plug-in MI of the smoothed window estimate, reusing the log tables:
  // sum_ij p_ij (a_ij - c_i - b_j).
  double const_term = 0.0;
  for (int i = 0; i < pdf.m; ++i)
    for (int j = 0; j < pdf.n; ++j) {
      const std::size_t idx = static_cast<std::size_t>(i) * pdf.n + j;
      const_term += pdf.p[idx] * (k.a[idx] - k.c[i] - k.b[j]);
    }
  k.const_term = const_term;

  const std::size_t row = static_cast<std::size_t>(i_star - 1) * pdf.n;
  k.beta.resize(pdf.n);
  k.alpha.resize(pdf.n);
  const double s2 = k.s_weight * k.s_weight;
  for (int j = 0; j < pdf.n; ++j) {
    k.beta[j] = k.s_weight * (k.a[row + j] - k.b[j]);
    k.alpha[j] = s2 * (1.0 / pdf.p[row + j] - 1.0 / pdf.py[j]) / (2.0 * kLn2);
  }
  return k;
}

double mi_proxy_value(const MiProxyCoefficients& k, std::span<const double> z_row) {
  if (static_cast<int>(z_row.size()) != k.n)
    throw std::invalid_argument("mi_proxy_value: z-row length mismatch");
  double v = k.const_term;
  for (int j = 0; j < k.n; ++j) v += z_row[j] * (k.beta[j] + k.alpha[j] * z_row[j]);
  return v;
}

std::vector<double> mi_proxy_gradient(const MiProxyCoefficients& k,
                                      std::span<const double> z_row) {
  if (static_cast<int>(z_row.size()) != k.n)
    throw std::invalid_argument("mi_proxy_gradient: z-row length mismatch");
  std::vector<double> g(k.n);
  for (int j = 0; j < k.n; ++j) g[j] = k.beta[j] + 2.0 * k.alpha[j] * z_row[j];
  return g;
}

}  // namespace dersim
