#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <vector>

#include "dersim/centralized.hpp"
#include "dersim/histogram_window.hpp"
#include "dersim/mi_proxy.hpp"
#include "dersim/rng.hpp"
#include "oracles.hpp"

using namespace dersim;

namespace {

HouseholdConfig wide_house(double y_max = 12.0) {
  HouseholdConfig h;
  h.id = "c";
  h.battery = BatteryParams{};
  h.grid.x_edges = {0.0, 1.5, 3.0};
  h.grid.y_edges = {0.0, 3.0, 6.0, 9.0, 12.0};
  h.y_min_kw = 0.0;
  h.y_max_kw = y_max;
  return h;
}

MiProxyCoefficients coeffs_for(const HouseholdConfig& h, Rng& rng, int fills) {
  HistogramWindow w(h.grid.m(), h.grid.n(), 16, 0.1);
  std::vector<double> z(static_cast<std::size_t>(h.grid.n()));
  for (int k = 0; k < fills; ++k) {
    double sum = 0.0;
    for (double& v : z) {
      v = rng.uniform();
      sum += v;
    }
    for (double& v : z) v /= sum;
    w.update(rng.uniform_int(1, h.grid.m()), z);
  }
  return mi_proxy_coefficients(w.pdf(), rng.uniform_int(1, h.grid.m()));
}

HouseholdBlock make_block(const HouseholdConfig& h, double x, double y_ref, Rng& rng) {
  HouseholdBlock b;
  b.house = &h;
  b.x_kw = x;
  b.y_ref_kw = y_ref;
  b.charging = true;
  b.soc_kwh = 3.2;
  b.dt_h = 5.0 / 3600.0;
  b.coeffs = coeffs_for(h, rng, rng.uniform_int(0, 18));
  return b;
}

// Plain projected gradient on the stacked coupled problem, block projections
// done by the Dykstra oracle. Slow but entirely separate machinery.
double pg_oracle_objective(std::vector<HouseholdBlock>& blocks, double y_bar,
                           const ControllerCoefficients& k, int iters) {
  const std::size_t nb = blocks.size();
  std::vector<double> s(nb, 0.0);
  std::vector<std::vector<double>> z(nb);
  std::vector<ProjectionProblem> probs(nb);
  for (std::size_t l = 0; l < nb; ++l) {
    const HouseholdConfig& h = *blocks[l].house;
    probs[l].charging = blocks[l].charging;
    probs[l].x_hat = blocks[l].x_kw;
    probs[l].soc_kwh = blocks[l].soc_kwh;
    probs[l].battery = h.battery;
    probs[l].grid = h.grid;
    probs[l].y_min = h.y_min_kw;
    probs[l].y_max = h.y_max_kw;
    probs[l].dt_h = blocks[l].dt_h;
    z[l].assign(static_cast<std::size_t>(h.grid.n()), 1.0 / h.grid.n());
    probs[l].s_tilde = 0.0;
    probs[l].z_tilde = z[l];
    const oracle::DykstraResult r0 = oracle::dykstra_project(probs[l]);
    s[l] = r0.s;
    z[l] = r0.z;
  }
  double lips = 2.0 + k.sigma2;
  for (const HouseholdBlock& b : blocks) {
    double amax = 0.0;
    for (double a : b.coeffs.alpha) amax = std::max(amax, a);
    lips = std::max(lips, 2.0 + k.sigma2 + 2.0 * b.house->mu * amax);
  }
  lips += k.sigma1 * static_cast<double>(nb);
  const double step = 1.0 / lips;

  for (int it = 0; it < iters; ++it) {
    double sum_y = 0.0;
    for (std::size_t l = 0; l < nb; ++l)
      sum_y += blocks[l].x_kw + (blocks[l].charging ? s[l] : -s[l]);
    for (std::size_t l = 0; l < nb; ++l) {
      const HouseholdBlock& b = blocks[l];
      const int dir = b.charging ? 1 : -1;
      const double y = b.x_kw + dir * s[l];
      const double gs =
          dir * (2.0 * (y - b.y_ref_kw) + k.sigma1 * (sum_y - y_bar)) + k.sigma2 * s[l];
      const std::vector<double> gz_mi = mi_proxy_gradient(b.coeffs, z[l]);
      probs[l].s_tilde = s[l] - step * gs;
      probs[l].z_tilde = z[l];
      for (std::size_t j = 0; j < z[l].size(); ++j)
        probs[l].z_tilde[j] -=
            step * (b.house->mu * gz_mi[j] + k.sigma2 * z[l][j]);
      const oracle::DykstraResult r = oracle::dykstra_project(probs[l], 1e-13);
      s[l] = r.s;
      z[l] = r.z;
    }
  }
  std::vector<BlockSolution> sol(nb);
  for (std::size_t l = 0; l < nb; ++l) {
    sol[l].s = s[l];
    sol[l].z = z[l];
    sol[l].y = blocks[l].x_kw + (blocks[l].charging ? s[l] : -s[l]);
  }
  return coupled_objective(blocks, y_bar, k, sol);
}

}  // namespace

TEST_CASE("single free block lands on the closed-form compromise") {
  HouseholdConfig h = wide_house();
  h.mu = 0.0;
  Rng rng(301);
  HouseholdBlock b = make_block(h, 3.0, 5.0, rng);
  ControllerCoefficients k;
  const double y_bar = 6.0;
  const CentralizedSolution sol = solve_centralized({&b, 1}, y_bar, k);
  // min (x+s-y_ref)^2 + sigma1/2 (x+s-ybar)^2 + sigma2/2 s^2 over s.
  const double want =
      (2.0 * (b.y_ref_kw - b.x_kw) + k.sigma1 * (y_bar - b.x_kw)) / (2.0 + k.sigma1 + k.sigma2);
  CHECK(sol.blocks[0].s == doctest::Approx(want).epsilon(1e-7));
  CHECK(sol.kkt_residual <= 1e-8);
  CHECK_FALSE(sol.blocks[0].wants_flip);
}

TEST_CASE("reported objective matches the public evaluation") {
  Rng rng(302);
  HouseholdConfig h = wide_house();
  h.mu = 3.0;
  std::vector<HouseholdBlock> blocks;
  for (int l = 0; l < 3; ++l) blocks.push_back(make_block(h, 1.0 + 0.4 * l, 2.0, rng));
  ControllerCoefficients k;
  const CentralizedSolution sol = solve_centralized(blocks, 9.0, k);
  CHECK(sol.objective ==
        doctest::Approx(coupled_objective(blocks, 9.0, k, sol.blocks)).epsilon(1e-12));
}

TEST_CASE("block descent meets the projected-gradient oracle") {
  Rng rng(303);
  ControllerCoefficients k;
  for (int trial = 0; trial < 4; ++trial) {
    HouseholdConfig h = wide_house();
    h.mu = trial * 2.0;
    std::vector<HouseholdBlock> blocks;
    const int nb = 2 + trial;
    for (int l = 0; l < nb; ++l)
      blocks.push_back(make_block(h, rng.uniform(0.5, 2.5), rng.uniform(1.0, 5.0), rng));
    const double y_bar = rng.uniform(4.0, 12.0);
    const CentralizedSolution sol = solve_centralized(blocks, y_bar, k);
    const double f_pg = pg_oracle_objective(blocks, y_bar, k, 4000);
    // The oracle can only be worse; both must agree near the optimum.
    CHECK(sol.objective <= f_pg + 1e-6);
    CHECK(std::abs(sol.objective - f_pg) <=
          1e-5 * std::max(1.0, std::abs(sol.objective)));
  }
}

TEST_CASE("a pinned rate with outward pull requests a flag flip") {
  HouseholdConfig h = wide_house();
  h.mu = 0.0;
  Rng rng(304);
  // Load far above both the reference and the target: the optimum discharges,
  // but the block is stuck in charge mode, so s pins at zero.
  HouseholdBlock b = make_block(h, 6.0, 1.0, rng);
  ControllerCoefficients k;
  const CentralizedSolution pinned = solve_centralized({&b, 1}, 2.0, k);
  CHECK(pinned.blocks[0].s == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(pinned.blocks[0].wants_flip);

  HouseholdBlock flipped = b;
  flipped.charging = false;
  const CentralizedSolution after = solve_centralized({&flipped, 1}, 2.0, k);
  CHECK(after.blocks[0].s > 0.1);
  CHECK_FALSE(after.blocks[0].wants_flip);
  CHECK(after.objective < pinned.objective);
}

TEST_CASE("warm start reproduces the cold solution faster") {
  Rng rng(305);
  ControllerCoefficients k;
  HouseholdConfig h = wide_house();
  h.mu = 2.0;
  std::vector<HouseholdBlock> blocks;
  for (int l = 0; l < 4; ++l)
    blocks.push_back(make_block(h, rng.uniform(0.5, 2.5), rng.uniform(1.0, 5.0), rng));
  const CentralizedSolution cold = solve_block_descent(blocks, 8.0, k, 2000, 1e-8);

  // Nudge the problem the way one forecast step would and re-solve both ways.
  for (HouseholdBlock& b : blocks) b.x_kw += 0.01;
  const CentralizedSolution cold2 = solve_block_descent(blocks, 8.05, k, 2000, 1e-8);
  const CentralizedSolution warm2 =
      solve_block_descent(blocks, 8.05, k, 2000, 1e-8, cold.blocks);
  CHECK(warm2.objective == doctest::Approx(cold2.objective).epsilon(1e-8));
  for (std::size_t l = 0; l < blocks.size(); ++l)
    CHECK(std::abs(warm2.blocks[l].s - cold2.blocks[l].s) <= 1e-6);
  CHECK(warm2.sweeps <= cold2.sweeps);
}

TEST_CASE("solver rejects malformed blocks") {
  ControllerCoefficients k;
  CHECK_THROWS(solve_centralized({}, 1.0, k));
  HouseholdBlock b;  // null house
  CHECK_THROWS(solve_centralized({&b, 1}, 1.0, k));
  HouseholdConfig h = wide_house();
  Rng rng(306);
  HouseholdBlock c = make_block(h, 1.0, 1.0, rng);
  c.coeffs.beta.pop_back();
  CHECK_THROWS(solve_centralized({&c, 1}, 1.0, k));
}
