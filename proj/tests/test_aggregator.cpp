#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <vector>

#include "dersim/aggregator.hpp"

using namespace dersim;

namespace {

LoadTrace ramp_trace(int seconds) {
  LoadTrace t;
  t.id = "ramp";
  t.values.resize(static_cast<std::size_t>(seconds));
  for (int k = 0; k < seconds; ++k) t.values[static_cast<std::size_t>(k)] = 0.001 * k;
  return t;
}

}  // namespace

TEST_CASE("day-ahead staircase is the per-window mean") {
  const LoadTrace t = ramp_trace(3600);
  const std::vector<double> s = generate_day_ahead(t);
  REQUIRE(s.size() == 2);
  // Mean of 0.001*k over k in [0,1800) and [1800,3600).
  CHECK(s[0] == doctest::Approx(0.001 * 1799.0 / 2.0).epsilon(1e-12));
  CHECK(s[1] == doctest::Approx(0.001 * (1800.0 + 3599.0) / 2.0).epsilon(1e-12));
  // A trailing partial window is dropped.
  CHECK(generate_day_ahead(ramp_trace(4000)).size() == 2);
  CHECK_THROWS(generate_day_ahead(ramp_trace(900)));
}

TEST_CASE("broadcast signal is the stale aggregate minus the fresh target") {
  CHECK(broadcast_signal(5.0, 3.0) == 2.0);
  CHECK(broadcast_signal(1.0, 4.0) == -3.0);
}

TEST_CASE("target profile indexes by whole target intervals") {
  TargetProfile p;
  p.target_dt_s = 5;
  p.values_kw = {10.0, 20.0};
  CHECK(p.at_tick(0) == 10.0);
  CHECK(p.at_tick(4) == 10.0);
  CHECK(p.at_tick(5) == 20.0);
  CHECK(p.at_tick(9) == 20.0);
}

TEST_CASE("target perturbation is energy-neutral per window and clipped") {
  const std::vector<double> base{2.0, 3.5, 1.0, 4.0};
  const double gamma = 1.5;
  const TargetProfile p = generate_target(base, gamma, 5, 4 * 1800, 77);
  REQUIRE(p.values_kw.size() == 4 * 360);
  for (std::size_t w = 0; w < base.size(); ++w) {
    double mean = 0.0, worst = 0.0;
    for (std::size_t k = 0; k < 360; ++k) {
      const double d = p.values_kw[w * 360 + k] - base[w];
      mean += d;
      worst = std::max(worst, std::abs(d));
    }
    mean /= 360.0;
    CHECK(std::abs(mean) <= 1e-12);
    // Demeaning after the clip can push a boundary sample out by the shift.
    CHECK(worst <= gamma * 1.1);
  }
}

TEST_CASE("target generation is seed-deterministic") {
  const std::vector<double> base{2.0, 3.0};
  const TargetProfile a = generate_target(base, 1.0, 5, 3600, 9);
  const TargetProfile b = generate_target(base, 1.0, 5, 3600, 9);
  const TargetProfile c = generate_target(base, 1.0, 5, 3600, 10);
  CHECK(a.values_kw == b.values_kw);
  CHECK(a.values_kw != c.values_kw);
}

TEST_CASE("zero reserve reproduces the staircase exactly") {
  const std::vector<double> base{2.0, 3.0};
  const TargetProfile p = generate_target(base, 0.0, 5, 3600, 4);
  for (std::size_t k = 0; k < 360; ++k) CHECK(p.values_kw[k] == base[0]);
  for (std::size_t k = 360; k < 720; ++k) CHECK(p.values_kw[k] == base[1]);
}

TEST_CASE("target generation validates its timing") {
  const std::vector<double> base{2.0};
  CHECK_THROWS(generate_target(base, 1.0, 7, 1800, 1));   // 7 s does not divide 1800
  CHECK_THROWS(generate_target(base, 1.0, 5, 1000, 1));   // partial window horizon
  CHECK_THROWS(generate_target(base, 1.0, 5, 3600, 1));   // staircase length mismatch
  CHECK_THROWS(generate_target(base, -1.0, 5, 1800, 1));  // negative reserve
}

TEST_CASE("measured aggregate sums the household loads") {
  const std::vector<double> loads{1.0, 2.5, 0.5};
  CHECK(measure_aggregate(loads) == doctest::Approx(4.0).epsilon(1e-15));
}
