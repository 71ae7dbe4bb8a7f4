#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <stdexcept>
#include <vector>

#include "dersim/core_model.hpp"

using namespace dersim;

TEST_CASE("battery step charges through the efficiency") {
  // 3.3 kW charge for one second at 0.96: 3.2 + 0.96 * 3.3 / 3600.
  const double e = battery_step(3.2, 3.3, 0.0, 0.96, 1.0 / 3600.0);
  CHECK(e == doctest::Approx(3.20088).epsilon(1e-12));
}

TEST_CASE("battery step discharges against the efficiency") {
  // 3.3 kW discharge for one second: 1.0 - 3.3 / (0.96 * 3600).
  const double e = battery_step(1.0, 0.0, 3.3, 0.96, 1.0 / 3600.0);
  CHECK(e == doctest::Approx(0.9990451389).epsilon(1e-9));
}

TEST_CASE("battery step rejects unphysical inputs") {
  CHECK_THROWS_AS(battery_step(1.0, -0.1, 0.0, 0.96, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(battery_step(1.0, 0.0, -0.1, 0.96, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(battery_step(1.0, 1.0, 1.0, 0.96, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(battery_step(1.0, 1.0, 0.0, 0.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(battery_step(1.0, 1.0, 0.0, 1.1, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(battery_step(1.0, 1.0, 0.0, 0.96, 0.0), std::invalid_argument);
}

TEST_CASE("grid load adds the battery flow to the consumer load") {
  CHECK(grid_load(1.0, 0.5, 0.0) == 1.5);
  CHECK(grid_load(1.0, 0.0, 0.5) == 0.5);
}

TEST_CASE("quantize uses half-open bins with clamping") {
  const std::vector<double> edges{0.0, 1.0, 2.0, 10.0};
  CHECK(quantize(1.5, edges) == 2);
  CHECK(quantize(1.0, edges) == 2);  // left edge belongs to the bin
  CHECK(quantize(9.9, edges) == 3);
  CHECK(quantize(0.0, edges) == 1);
  CHECK(quantize(-5.0, edges) == 1);   // below the grid clamps low
  CHECK(quantize(10.0, edges) == 3);   // the top edge is closed
  CHECK(quantize(99.0, edges) == 3);   // above the grid clamps high
  CHECK_THROWS_AS(quantize(1.0, std::vector<double>{0.0}), std::invalid_argument);
  CHECK_THROWS_AS(quantize(std::nan(""), edges), std::invalid_argument);
}

TEST_CASE("quantize agrees with a linear scan on a fine grid") {
  std::vector<double> edges;
  for (int k = 0; k <= 57; ++k) edges.push_back(0.1 * k * k);
  for (double v = -1.0; v < 340.0; v += 0.37) {
    int want = 1;
    for (std::size_t j = 1; j + 1 < edges.size(); ++j)
      if (v >= edges[j]) want = static_cast<int>(j) + 1;
    CHECK(quantize(v, edges) == want);
  }
}

TEST_CASE("validation rejects malformed structures") {
  LoadTrace t;
  t.id = "a";
  CHECK_THROWS_AS(t.validate(), std::invalid_argument);
  t.values = {1.0, -0.5};
  CHECK_THROWS_AS(t.validate(), std::invalid_argument);
  t.values = {1.0, 0.5};
  CHECK_NOTHROW(t.validate());

  QuantizationGrid g;
  g.x_edges = {0.0, 1.0};
  g.y_edges = {0.0};
  CHECK_THROWS_AS(g.validate(), std::invalid_argument);
  g.y_edges = {0.0, 0.0};
  CHECK_THROWS_AS(g.validate(), std::invalid_argument);
  g.y_edges = {0.0, 1.0};
  CHECK_NOTHROW(g.validate());
  CHECK(g.m() == 1);
  CHECK(g.n() == 1);

  TimingConfig tm;
  CHECK_NOTHROW(tm.validate());
  tm.forecast_dt_s = 7;
  tm.control_dt_s = 2;
  CHECK_THROWS_AS(tm.validate(), std::invalid_argument);
  tm = TimingConfig{};
  tm.discard_s = tm.horizon_s;
  CHECK_THROWS_AS(tm.validate(), std::invalid_argument);

  HouseholdConfig h;
  h.grid.x_edges = {0.0, 1.0};
  h.grid.y_edges = {0.0, 1.0};
  h.y_max_kw = 0.0;  // equal to y_min
  CHECK_THROWS_AS(h.validate(), std::invalid_argument);
  h.y_max_kw = 5.0;
  CHECK_NOTHROW(h.validate());
  h.mu = -1.0;
  CHECK_THROWS_AS(h.validate(), std::invalid_argument);
}
