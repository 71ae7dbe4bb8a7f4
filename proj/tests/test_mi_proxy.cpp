#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <vector>

#include "dersim/histogram_window.hpp"
#include "dersim/mi_proxy.hpp"
#include "dersim/rng.hpp"
#include "oracles.hpp"

using namespace dersim;

namespace {

HistogramWindow square_window() {
  // counts [[1,1],[1,1]], D = 5.4; every marginal is 2.2/5.4.
  HistogramWindow w(2, 2, 5, 0.1);
  w.update(1, std::vector<double>{1.0, 0.0});
  w.update(2, std::vector<double>{0.0, 1.0});
  w.update(1, std::vector<double>{0.0, 1.0});
  w.update(2, std::vector<double>{1.0, 0.0});
  return w;
}

HistogramWindow random_window(Rng& rng, int m, int n, int cap) {
  HistogramWindow w(m, n, cap, 0.1);
  const int fills = rng.uniform_int(0, cap + 3);
  std::vector<double> z(static_cast<std::size_t>(n));
  for (int k = 0; k < fills; ++k) {
    double sum = 0.0;
    for (double& v : z) {
      v = rng.uniform();
      sum += v;
    }
    for (double& v : z) v /= sum;
    w.update(rng.uniform_int(1, m), z);
  }
  return w;
}

}  // namespace

TEST_CASE("linear and quadratic coefficients on the hand-filled window") {
  const MiProxyCoefficients k = mi_proxy_coefficients(square_window().pdf(), 1);
  // beta_1 = (1/D) log2(p_11 / py_1) = (1/5.4) log2(1.1/2.2) = -1/5.4.
  CHECK(k.beta[0] == doctest::Approx(-1.0 / 5.4).epsilon(1e-12));
  // alpha_1 = (1/D^2)(1/p_11 - 1/py_1) / (2 ln 2).
  CHECK(k.alpha[0] == doctest::Approx(0.0607198).epsilon(1e-5));
  CHECK(k.s_weight == doctest::Approx(1.0 / 5.4).epsilon(1e-12));
}

TEST_CASE("value at zero is the constant term and matches the table MI") {
  const PdfEstimates pdf = square_window().pdf();
  const MiProxyCoefficients k = mi_proxy_coefficients(pdf, 2);
  CHECK(mi_proxy_value(k, std::vector<double>{0.0, 0.0}) ==
        doctest::Approx(k.const_term).epsilon(1e-12));
  // The constant term is the plug-in MI of the smoothed table itself.
  CHECK(k.const_term == doctest::Approx(oracle::table_mi(pdf.p, 2, 2)).epsilon(1e-10));
}

TEST_CASE("single-row grids make the proxy exactly flat") {
  HistogramWindow w(1, 3, 6, 0.1);
  w.update(1, std::vector<double>{0.2, 0.5, 0.3});
  w.update(1, std::vector<double>{1.0, 0.0, 0.0});
  const MiProxyCoefficients k = mi_proxy_coefficients(w.pdf(), 1);
  for (int j = 0; j < 3; ++j) {
    CHECK(k.alpha[static_cast<std::size_t>(j)] == 0.0);
    CHECK(k.beta[static_cast<std::size_t>(j)] == 0.0);
  }
  // Flat means flat: every z evaluates to the same constant. The constant
  // itself is nonzero because the undersummed table's plug-in is not a true
  // MI, but no gradient ever sees it.
  CHECK(mi_proxy_value(k, std::vector<double>{1.0, 0.0, 0.0}) ==
        doctest::Approx(k.const_term).epsilon(1e-15));
  CHECK(mi_proxy_value(k, std::vector<double>{0.0, 0.3, 0.7}) ==
        doctest::Approx(k.const_term).epsilon(1e-15));
}

TEST_CASE("curvature is strictly positive whenever there are two rows") {
  Rng rng(41);
  for (int trial = 0; trial < 50; ++trial) {
    const int m = rng.uniform_int(2, 8), n = rng.uniform_int(1, 8);
    HistogramWindow w = random_window(rng, m, n, rng.uniform_int(1, 30));
    const MiProxyCoefficients k = mi_proxy_coefficients(w.pdf(), rng.uniform_int(1, m));
    for (double a : k.alpha) CHECK(a > 0.0);
  }
}

TEST_CASE("slope magnitude respects the smoothing floor bound") {
  Rng rng(42);
  for (int trial = 0; trial < 200; ++trial) {
    const int m = rng.uniform_int(1, 10), n = rng.uniform_int(1, 10);
    HistogramWindow w = random_window(rng, m, n, rng.uniform_int(1, 40));
    const PdfEstimates pdf = w.pdf();
    const MiProxyCoefficients k = mi_proxy_coefficients(pdf, rng.uniform_int(1, m));
    const double cap = (1.0 / pdf.d) * std::log2(pdf.d / 0.1);
    for (double b : k.beta) CHECK(std::abs(b) <= cap + 1e-12);
  }
}

TEST_CASE("gradient matches central differences of the value") {
  Rng rng(43);
  for (int trial = 0; trial < 40; ++trial) {
    const int m = rng.uniform_int(1, 6), n = rng.uniform_int(1, 6);
    HistogramWindow w = random_window(rng, m, n, rng.uniform_int(1, 25));
    const MiProxyCoefficients k = mi_proxy_coefficients(w.pdf(), rng.uniform_int(1, m));
    std::vector<double> z(static_cast<std::size_t>(n));
    for (double& v : z) v = rng.uniform();
    const std::vector<double> g = mi_proxy_gradient(k, z);
    auto f = [&](const std::vector<double>& zz) { return mi_proxy_value(k, zz); };
    for (std::size_t j = 0; j < z.size(); ++j) {
      const double fd = oracle::central_diff(f, z, j, 1e-6);
      CHECK(g[j] == doctest::Approx(fd).epsilon(1e-6).scale(1.0));
    }
  }
}

TEST_CASE("coefficient construction validates the selected row") {
  const PdfEstimates pdf = square_window().pdf();
  CHECK_THROWS(mi_proxy_coefficients(pdf, 0));
  CHECK_THROWS(mi_proxy_coefficients(pdf, 3));
}
