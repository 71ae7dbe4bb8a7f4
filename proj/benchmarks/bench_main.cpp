// Microbenchmarks for the per-tick hot path: projection, a full controller
// tick, window re-estimation, and one warm benchmark solve.

#include <benchmark/benchmark.h>

#include <vector>

#include "dersim/centralized.hpp"
#include "dersim/controller.hpp"
#include "dersim/histogram_window.hpp"
#include "dersim/mi_proxy.hpp"
#include "dersim/projection.hpp"
#include "dersim/rng.hpp"

using namespace dersim;

namespace {

HouseholdConfig default_house(int n_bins) {
  HouseholdConfig h;
  h.id = "bench";
  h.y_min_kw = 0.0;
  h.y_max_kw = 8.0;
  h.grid.x_edges = {0.0, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0, 4.5, 5.0, 5.5, 6.0, 6.5, 7.0, 7.5};
  h.grid.y_edges.clear();
  for (int j = 0; j <= n_bins; ++j) h.grid.y_edges.push_back(8.0 * j / n_bins);
  return h;
}

void BM_Project(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const HouseholdConfig h = default_house(n);
  ProjectionProblem p;
  p.battery = h.battery;
  p.grid = h.grid;
  p.y_min = h.y_min_kw;
  p.y_max = h.y_max_kw;
  p.soc_kwh = 3.2;
  p.charging = true;
  p.x_hat = 1.7;
  p.z_tilde.assign(static_cast<std::size_t>(n), 1.0 / n);
  Rng rng(1);
  for (auto _ : state) {
    p.s_tilde = rng.uniform(-1.0, 4.0);
    for (double& v : p.z_tilde) v += rng.uniform(-0.02, 0.02);
    benchmark::DoNotOptimize(project(p));
  }
}
BENCHMARK(BM_Project)->Arg(4)->Arg(15)->Arg(30);

void BM_HemsTick(benchmark::State& state) {
  const HouseholdConfig h = default_house(15);
  HemsState st = HemsState::init(h, 3.2);
  HistogramWindow win(h.grid.m(), h.grid.n(), 901, 0.1);
  Rng rng(2);
  ControllerCoefficients k;
  for (auto _ : state) {
    const double x_hat = rng.uniform(0.2, 4.0);
    const double e = rng.uniform(-3.0, 3.0);
    benchmark::DoNotOptimize(hems_tick(st, win, x_hat, 1.1, e, h, k, 1.0 / 3600.0));
  }
}
BENCHMARK(BM_HemsTick);

void BM_WindowPdf(benchmark::State& state) {
  HistogramWindow win(15, 15, 901, 0.1);
  Rng rng(3);
  std::vector<double> z(15, 0.0);
  for (int u = 0; u < 900; ++u) {
    z.assign(15, 0.0);
    z[rng.uniform_int(0, 14)] = 1.0;
    win.update(static_cast<int>(rng.uniform_int(1, 15)), z);
  }
  for (auto _ : state) benchmark::DoNotOptimize(win.pdf());
}
BENCHMARK(BM_WindowPdf);

void BM_CentralizedSolve(benchmark::State& state) {
  const int nh = static_cast<int>(state.range(0));
  const HouseholdConfig h = default_house(15);
  Rng rng(4);
  std::vector<HouseholdBlock> blocks(static_cast<std::size_t>(nh));
  HistogramWindow win(h.grid.m(), h.grid.n(), 901, 0.1);
  std::vector<double> z(15, 0.0);
  for (int u = 0; u < 300; ++u) {
    z.assign(15, 0.0);
    z[rng.uniform_int(0, 14)] = 1.0;
    win.update(static_cast<int>(rng.uniform_int(1, 15)), z);
  }
  for (auto& b : blocks) {
    b.house = &h;
    b.x_kw = rng.uniform(0.3, 3.0);
    b.y_ref_kw = b.x_kw + rng.uniform(-0.3, 0.3);
    b.soc_kwh = rng.uniform(1.0, 5.0);
    b.dt_h = 5.0 / 3600.0;
    b.coeffs = mi_proxy_coefficients(win.pdf(), quantize(b.x_kw, h.grid.x_edges));
  }
  ControllerCoefficients k;
  const double y_bar = 1.05 * nh;
  std::vector<BlockSolution> warm;
  for (auto _ : state) {
    CentralizedSolution sol = solve_block_descent(blocks, y_bar, k, 2000, 1e-8, warm);
    warm = sol.blocks;
    benchmark::DoNotOptimize(sol);
  }
}
BENCHMARK(BM_CentralizedSolve)->Arg(5)->Arg(20);

}  // namespace

BENCHMARK_MAIN();
