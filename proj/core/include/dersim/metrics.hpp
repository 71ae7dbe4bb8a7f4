#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace dersim {

// Tracking errors, in percent. Series are paired elementwise.
double nrmse(std::span<const double> y_hat, std::span<const double> y_bar);
double mape(std::span<const double> y_hat, std::span<const double> y_bar);
// Schedule deviation as a share of the household's maximum grid load.
double nmae(std::span<const double> y, std::span<const double> y_ref, double y_max_kw);

// Plug-in mutual information in bits between two real series, each quantized
// to equal-width bins over its own observed range (0 log 0 = 0, no
// smoothing). A constant series lands in one bin and contributes 0 bits.
double mi_iid(std::span<const double> x, std::span<const double> y, int m, int n);

// First-order-Markov rate estimate: I((X_t,X_t+1);(Y_t,Y_t+1)) - I(X_t;Y_t),
// both terms over the T-1 pair starting points so a deterministic cycle
// cancels exactly; sampling noise can push the difference negative, floored
// at 0.
double mi_markov(std::span<const double> x, std::span<const double> y, int m, int n);

// Block means over consecutive windows of `factor` samples; a trailing
// partial window is dropped.
std::vector<double> aggregate_series(std::span<const double> series, int factor);

// Side-information-compensated grid loads for one household:
//   g  = y - (y_hat - y_bar) * mean(y) / mean(y_hat)   (aggregate error share)
//   d  = y - y_ref
//   dg = g - y_ref
// mean(y_hat) is the sum of all household means, so a zero value is an error.
struct CompensatedLoads {
  std::vector<double> g;
  std::vector<double> d;
  std::vector<double> dg;
};
CompensatedLoads compensate_loads(std::span<const double> y, std::span<const double> y_hat,
                                  std::span<const double> y_bar,
                                  std::span<const double> y_ref);

// Bin count for a widened series: scaled proportionally to range growth so
// the quantization resolution stays comparable; never below `bins`.
int scaled_bins(int bins, double base_range, double new_range);

struct HouseholdMetrics {
  std::string id;
  double nmae = 0.0;
  double i_iid = 0.0, i_mk = 0.0;        // leakage of y itself
  double i_iid_g = 0.0, i_mk_g = 0.0;    // aggregate-error compensated
  double i_iid_d = 0.0, i_mk_d = 0.0;    // reference compensated
  double i_iid_dg = 0.0, i_mk_dg = 0.0;  // both
};

struct MetricsReport {
  int resolution_s = 1;
  double nrmse = 0.0;
  double mape = 0.0;
  double nmae_avg = 0.0;
  double i_iid_avg = 0.0, i_mk_avg = 0.0;
  double i_iid_g_avg = 0.0, i_mk_g_avg = 0.0;
  double i_iid_d_avg = 0.0, i_mk_d_avg = 0.0;
  double i_iid_dg_avg = 0.0, i_mk_dg_avg = 0.0;
  std::vector<HouseholdMetrics> households;
};

// Everything the report needs, at controller resolution (one sample per
// tick); build_metrics aggregates to `resolution_s` first, then compensates,
// then estimates leakage between each household's consumer load and the
// (compensated) grid load.
struct MetricsInput {
  int resolution_s = 1;
  int x_bins = 15, y_bins = 15;
  std::vector<std::string> ids;
  std::vector<double> y_max_kw;
  std::vector<std::vector<double>> x;      // consumer loads, per household
  std::vector<std::vector<double>> y;      // grid loads, per household
  std::vector<std::vector<double>> y_ref;  // consumer schedules, per household
  std::vector<double> y_hat;               // measured aggregate
  std::vector<double> y_bar;               // target
};
MetricsReport build_metrics(const MetricsInput& in);

// Flat key-value JSON document; per-household keys are prefixed by id.
void write_metrics_json(const MetricsReport& r, std::ostream& os);
// One CSV row per household, averages in a final "avg" row.
void write_metrics_csv(const MetricsReport& r, std::ostream& os);

}  // namespace dersim
