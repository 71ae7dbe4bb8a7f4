#include "dersim/simulation.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include "dersim/centralized.hpp"
#include "dersim/controller.hpp"
#include "dersim/histogram_window.hpp"
#include "dersim/mi_proxy.hpp"
#include "dersim/rng.hpp"
#include "dersim/traces.hpp"
#include "text_io.hpp"

namespace dersim {

namespace {

constexpr int kDayAheadWindowS = 1800;

std::vector<double> equal_width_edges(double lo, double hi, int bins) {
  std::vector<double> edges(static_cast<std::size_t>(bins) + 1);
  for (int i = 0; i <= bins; ++i)
    edges[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / bins;
  edges.back() = hi;
  return edges;
}

[[noreturn]] void tick_error(const char* run, int tick, const std::string& id,
                             const std::exception& e) {
  throw std::runtime_error(std::string(run) + ": tick " + std::to_string(tick) +
                           ", household " + id + ": " + e.what());
}

std::vector<double> tail_of(const std::vector<double>& v, std::size_t skip) {
  return std::vector<double>(v.begin() + static_cast<std::ptrdiff_t>(skip), v.end());
}

void reserve_series(HouseholdSeries& hs, std::size_t ticks) {
  hs.x.reserve(ticks);
  hs.x_hat.reserve(ticks);
  hs.y.reserve(ticks);
  hs.y_ref.reserve(ticks);
  hs.s_plus.reserve(ticks);
  hs.s_minus.reserve(ticks);
  hs.soc.reserve(ticks);
  hs.mi.reserve(ticks);
  hs.i_star.reserve(ticks);
}

}  // namespace

BuiltScenario build_scenario(const ScenarioConfig& cfg) {
  cfg.validate();
  BuiltScenario b;
  b.config = cfg;

  if (cfg.trace_files.empty()) {
    b.traces = synthesize_traces(cfg.households, cfg.timing.horizon_s, cfg.seed_traces);
  } else {
    b.traces = ingest_traces(cfg.trace_paths(), cfg.households, cfg.seed_traces);
  }
  for (LoadTrace& t : b.traces) {
    if (static_cast<int>(t.values.size()) < cfg.timing.horizon_s)
      throw std::runtime_error("scenario: trace " + t.id + " does not cover the horizon");
    t.values.resize(static_cast<std::size_t>(cfg.timing.horizon_s));
  }

  std::vector<double> mus = cfg.mu_values;
  if (mus.empty()) {
    Rng rng(cfg.seed_mu);
    mus.resize(static_cast<std::size_t>(cfg.households));
    for (double& mu : mus) mu = static_cast<double>(rng.uniform_int(cfg.mu_min, cfg.mu_max));
  }

  b.houses.reserve(b.traces.size());
  b.day_ahead.reserve(b.traces.size());
  for (std::size_t l = 0; l < b.traces.size(); ++l) {
    const LoadTrace& tr = b.traces[l];
    const auto [lo_it, hi_it] = std::minmax_element(tr.values.begin(), tr.values.end());
    double x_lo = *lo_it, x_hi = *hi_it;
    if (!(x_hi - x_lo > 0.0)) {
      x_lo -= 0.5;
      x_hi += 0.5;
    }
    HouseholdConfig h;
    h.id = tr.id;
    h.battery = cfg.battery;
    h.mu = mus[l];
    h.y_min_kw = cfg.y_min_kw;
    h.y_max_kw = cfg.y_max_kw > 0.0 ? cfg.y_max_kw : x_hi + cfg.battery.max_charge_kw;
    if (h.y_max_kw <= x_hi)
      throw std::runtime_error("scenario: y_max below the load peak of " + h.id);
    h.reserve_kw = cfg.reserve_kw;
    h.grid.x_edges = equal_width_edges(x_lo, x_hi, cfg.x_bins);
    h.grid.y_edges = equal_width_edges(h.y_min_kw, h.y_max_kw, cfg.y_bins);
    h.validate();
    b.houses.push_back(std::move(h));
    b.day_ahead.push_back(generate_day_ahead(tr, kDayAheadWindowS));
  }

  const std::size_t windows = b.day_ahead.front().size();
  std::vector<double> base(windows, 0.0);
  for (const std::vector<double>& da : b.day_ahead) {
    if (da.size() != windows)
      throw std::runtime_error("scenario: day-ahead staircases disagree on window count");
    for (std::size_t w = 0; w < windows; ++w) base[w] += da[w];
  }
  b.target = generate_target(base, cfg.households * cfg.reserve_kw, cfg.timing.target_dt_s,
                             cfg.timing.horizon_s, cfg.seed_target);
  return b;
}

RunResults run_scenario(const BuiltScenario& built) {
  const ScenarioConfig& cfg = built.config;
  const TimingConfig& tm = cfg.timing;
  const std::size_t nh = built.houses.size();
  if (nh != built.traces.size() || nh != built.day_ahead.size() || nh == 0)
    throw std::invalid_argument("scenario: household tables disagree");
  const int ticks = tm.horizon_s / tm.control_dt_s;
  const double dt_h = tm.control_dt_s / 3600.0;

  const auto t_start = std::chrono::steady_clock::now();

  RunResults rr;
  rr.ticks = ticks;
  rr.households.resize(nh);
  rr.y_hat.reserve(static_cast<std::size_t>(ticks));
  rr.y_bar.reserve(static_cast<std::size_t>(ticks));
  rr.e_signal.reserve(static_cast<std::size_t>(ticks));

  std::vector<HemsState> states;
  std::vector<HistogramWindow> windows;
  states.reserve(nh);
  windows.reserve(nh);
  for (std::size_t l = 0; l < nh; ++l) {
    states.push_back(HemsState::init(built.houses[l], cfg.initial_soc_kwh));
    windows.emplace_back(cfg.x_bins, cfg.y_bins, cfg.window_size, cfg.smoothing);
    rr.households[l].id = built.houses[l].id;
    reserve_series(rr.households[l], static_cast<std::size_t>(ticks));
  }

  Rng noise_rng(cfg.seed_noise);
  std::vector<double> x_hat(nh, 0.0);
  double y_hat_prev = 0.0;
  for (std::size_t l = 0; l < nh; ++l) y_hat_prev += built.traces[l].values[0];

  for (int k = 0; k < ticks; ++k) {
    const int t = k * tm.control_dt_s;
    const double y_bar = built.target.at_tick(t);
    const double e = broadcast_signal(y_hat_prev, y_bar);
    double y_hat = 0.0;
    for (std::size_t l = 0; l < nh; ++l) {
      const double x_true = built.traces[l].values[static_cast<std::size_t>(t)];
      if (t % tm.forecast_dt_s == 0) x_hat[l] = x_true;
      const double y_ref = built.day_ahead[l][static_cast<std::size_t>(t / kDayAheadWindowS)];
      HemsDecision d;
      try {
        d = hems_tick(states[l], windows[l], x_hat[l], y_ref, e, built.houses[l],
                      cfg.controller, dt_h);
      } catch (const std::exception& ex) {
        tick_error("scenario", k, built.houses[l].id, ex);
      }
      const double y_true = grid_load(x_true, d.s_plus, d.s_minus);
      y_hat += y_true;
      HouseholdSeries& hs = rr.households[l];
      hs.x.push_back(x_true);
      hs.x_hat.push_back(x_hat[l]);
      hs.y.push_back(y_true);
      hs.y_ref.push_back(y_ref);
      hs.s_plus.push_back(d.s_plus);
      hs.s_minus.push_back(d.s_minus);
      hs.soc.push_back(states[l].battery.soc_kwh);
      hs.mi.push_back(d.mi_value);
      hs.i_star.push_back(d.i_star);
    }
    if (cfg.measurement_noise_std > 0.0)
      y_hat += noise_rng.normal(0.0, cfg.measurement_noise_std);
    rr.y_hat.push_back(y_hat);
    rr.y_bar.push_back(y_bar);
    rr.e_signal.push_back(e);
    y_hat_prev = y_hat;
  }

  rr.metrics = metrics_from_results(rr, built, tm.control_dt_s);
  rr.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() -
                                                         t_start)
                   .count();
  return rr;
}

RunResults run_benchmark(const BuiltScenario& built) {
  const ScenarioConfig& cfg = built.config;
  const TimingConfig& tm = cfg.timing;
  const std::size_t nh = built.houses.size();
  if (nh != built.traces.size() || nh != built.day_ahead.size() || nh == 0)
    throw std::invalid_argument("scenario: household tables disagree");
  const int ticks = tm.horizon_s / tm.control_dt_s;
  const double tick_h = tm.control_dt_s / 3600.0;
  // The problem changes whenever the forecast or the target does.
  const int solve_dt = std::gcd(tm.forecast_dt_s, tm.target_dt_s);
  const double hold_h = solve_dt / 3600.0;

  const auto t_start = std::chrono::steady_clock::now();

  RunResults rr;
  rr.ticks = ticks;
  rr.households.resize(nh);
  rr.y_hat.reserve(static_cast<std::size_t>(ticks));
  rr.y_bar.reserve(static_cast<std::size_t>(ticks));
  rr.e_signal.reserve(static_cast<std::size_t>(ticks));

  std::vector<HistogramWindow> windows;
  windows.reserve(nh);
  std::vector<bool> charging(nh, true);
  std::vector<bool> pending_flip(nh, false);
  std::vector<double> soc(nh, cfg.initial_soc_kwh);
  struct Held {
    double s = 0.0;
    int i_star = 1;
    std::vector<double> z;
    double mi = 0.0;
    double x_at_solve = 0.0;
  };
  std::vector<Held> held(nh);
  for (std::size_t l = 0; l < nh; ++l) {
    windows.emplace_back(cfg.x_bins, cfg.y_bins, cfg.window_size, cfg.smoothing);
    rr.households[l].id = built.houses[l].id;
    reserve_series(rr.households[l], static_cast<std::size_t>(ticks));
  }

  Rng noise_rng(cfg.seed_noise);
  std::vector<HouseholdBlock> blocks(nh);
  std::vector<BlockSolution> warm;
  std::vector<MiProxyCoefficients> coeffs(nh);
  double y_hat_prev = 0.0;
  for (std::size_t l = 0; l < nh; ++l) y_hat_prev += built.traces[l].values[0];

  for (int k = 0; k < ticks; ++k) {
    const int t = k * tm.control_dt_s;
    const double y_bar = built.target.at_tick(t);
    const double e = broadcast_signal(y_hat_prev, y_bar);

    if (t % solve_dt == 0) {
      for (std::size_t l = 0; l < nh; ++l) {
        if (pending_flip[l]) charging[l] = !charging[l];
        pending_flip[l] = false;
        const double x = built.traces[l].values[static_cast<std::size_t>(t)];
        const int i_star = quantize(x, built.houses[l].grid.x_edges);
        coeffs[l] = mi_proxy_coefficients(windows[l].pdf(), i_star);
        HouseholdBlock& b = blocks[l];
        b.house = &built.houses[l];
        b.x_kw = x;
        b.y_ref_kw = built.day_ahead[l][static_cast<std::size_t>(t / kDayAheadWindowS)];
        b.charging = charging[l];
        b.soc_kwh = soc[l];
        b.dt_h = hold_h;
        b.coeffs = coeffs[l];
        held[l].i_star = i_star;
        held[l].x_at_solve = x;
      }
      CentralizedSolution sol;
      try {
        sol = solve_block_descent(blocks, y_bar, cfg.controller, 2000, 1e-8, warm);
      } catch (const std::exception& ex) {
        throw std::runtime_error("benchmark: tick " + std::to_string(k) + ": " + ex.what());
      }
      warm = sol.blocks;
      for (std::size_t l = 0; l < nh; ++l) {
        held[l].s = sol.blocks[l].s;
        held[l].z = sol.blocks[l].z;
        held[l].mi = mi_proxy_value(coeffs[l], held[l].z);
        pending_flip[l] = sol.blocks[l].wants_flip;
      }
    }

    double y_hat = 0.0;
    for (std::size_t l = 0; l < nh; ++l) {
      // Snap solver slack (certified <= 1e-9) out of the held rate so the
      // actuated step stays physical at every tick of the hold.
      const BatteryParams& bp = built.houses[l].battery;
      const double rate = charging[l] ? bp.max_charge_kw : bp.max_discharge_kw;
      const double soc_room = charging[l] ? (bp.capacity_kwh - soc[l]) / (tick_h * bp.efficiency)
                                          : soc[l] * bp.efficiency / tick_h;
      const double s_act = std::max(0.0, std::min(held[l].s, std::min(rate, soc_room)));
      const double s_plus = charging[l] ? s_act : 0.0;
      const double s_minus = charging[l] ? 0.0 : s_act;
      try {
        soc[l] = battery_step(soc[l], s_plus, s_minus, built.houses[l].battery.efficiency,
                              tick_h);
        windows[l].update(held[l].i_star, held[l].z);
      } catch (const std::exception& ex) {
        tick_error("benchmark", k, built.houses[l].id, ex);
      }
      const double x_true = built.traces[l].values[static_cast<std::size_t>(t)];
      const double y_true = grid_load(x_true, s_plus, s_minus);
      y_hat += y_true;
      HouseholdSeries& hs = rr.households[l];
      hs.x.push_back(x_true);
      hs.x_hat.push_back(held[l].x_at_solve);
      hs.y.push_back(y_true);
      hs.y_ref.push_back(built.day_ahead[l][static_cast<std::size_t>(t / kDayAheadWindowS)]);
      hs.s_plus.push_back(s_plus);
      hs.s_minus.push_back(s_minus);
      hs.soc.push_back(soc[l]);
      hs.mi.push_back(held[l].mi);
      hs.i_star.push_back(held[l].i_star);
    }
    if (cfg.measurement_noise_std > 0.0)
      y_hat += noise_rng.normal(0.0, cfg.measurement_noise_std);
    rr.y_hat.push_back(y_hat);
    rr.y_bar.push_back(y_bar);
    rr.e_signal.push_back(e);
    y_hat_prev = y_hat;
  }

  rr.metrics = metrics_from_results(rr, built, tm.control_dt_s);
  rr.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() -
                                                         t_start)
                   .count();
  return rr;
}

MetricsReport metrics_from_results(const RunResults& rr, const BuiltScenario& built,
                                   int resolution_s) {
  const TimingConfig& tm = built.config.timing;
  if (resolution_s < tm.control_dt_s || resolution_s % tm.control_dt_s != 0)
    throw std::invalid_argument("metrics: resolution must be a multiple of the control step");
  const std::size_t skip = static_cast<std::size_t>(tm.discard_s / tm.control_dt_s);
  if (skip >= rr.y_hat.size())
    throw std::invalid_argument("metrics: discard window swallows the whole run");

  MetricsInput in;
  in.resolution_s = resolution_s / tm.control_dt_s;  // aggregation factor in ticks
  in.x_bins = built.config.x_bins;
  in.y_bins = built.config.y_bins;
  for (std::size_t l = 0; l < rr.households.size(); ++l) {
    const HouseholdSeries& hs = rr.households[l];
    in.ids.push_back(hs.id);
    in.y_max_kw.push_back(built.houses[l].y_max_kw);
    in.x.push_back(tail_of(hs.x, skip));
    in.y.push_back(tail_of(hs.y, skip));
    in.y_ref.push_back(tail_of(hs.y_ref, skip));
  }
  in.y_hat = tail_of(rr.y_hat, skip);
  in.y_bar = tail_of(rr.y_bar, skip);
  MetricsReport r = build_metrics(in);
  r.resolution_s = resolution_s;
  return r;
}

namespace {

void write_traces_csv(const RunResults& rr, std::ostream& os) {
  std::string row = "tick,y_bar,y_hat,e_signal";
  for (const HouseholdSeries& hs : rr.households) {
    for (const char* col : {"x_", "xhat_", "y_", "yref_", "splus_", "sminus_", "soc_",
                            "istar_", "mi_"}) {
      row.push_back(',');
      row += col;
      row += hs.id;
    }
  }
  row.push_back('\n');
  os << row;
  for (int k = 0; k < rr.ticks; ++k) {
    const std::size_t u = static_cast<std::size_t>(k);
    row.clear();
    row += std::to_string(k);
    row.push_back(',');
    detail::append_double(row, rr.y_bar[u]);
    row.push_back(',');
    detail::append_double(row, rr.y_hat[u]);
    row.push_back(',');
    detail::append_double(row, rr.e_signal[u]);
    for (const HouseholdSeries& hs : rr.households) {
      for (double v : {hs.x[u], hs.x_hat[u], hs.y[u], hs.y_ref[u], hs.s_plus[u],
                       hs.s_minus[u], hs.soc[u]}) {
        row.push_back(',');
        detail::append_double(row, v);
      }
      row.push_back(',');
      row += std::to_string(hs.i_star[u]);
      row.push_back(',');
      detail::append_double(row, hs.mi[u]);
    }
    row.push_back('\n');
    os << row;
  }
}

// Target/measured overlay, downsampled; a fixed-size self-contained chart.
void write_tracking_svg(const RunResults& rr, std::ostream& os) {
  const int w = 1000, h = 420, ml = 60, mr = 20, mt = 20, mb = 40;
  const double plot_w = w - ml - mr, plot_h = h - mt - mb;
  double lo = rr.y_bar[0], hi = rr.y_bar[0];
  for (double v : rr.y_bar) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  for (double v : rr.y_hat) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  if (!(hi - lo > 0.0)) hi = lo + 1.0;
  const double pad = 0.05 * (hi - lo);
  lo -= pad;
  hi += pad;
  const int stride = std::max(1, rr.ticks / 2000);

  auto polyline = [&](const std::vector<double>& v, const char* color) {
    std::string p = "  <polyline fill=\"none\" stroke=\"";
    p += color;
    p += "\" stroke-width=\"1.2\" points=\"";
    for (int k = 0; k < rr.ticks; k += stride) {
      const double px = ml + plot_w * k / std::max(1, rr.ticks - 1);
      const double py = mt + plot_h * (1.0 - (v[static_cast<std::size_t>(k)] - lo) / (hi - lo));
      detail::append_double(p, px);
      p.push_back(',');
      detail::append_double(p, py);
      p.push_back(' ');
    }
    p += "\"/>\n";
    return p;
  };

  std::string out = "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 " +
                    std::to_string(w) + " " + std::to_string(h) + "\">\n";
  out += "  <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out += "  <rect x=\"" + std::to_string(ml) + "\" y=\"" + std::to_string(mt) + "\" width=\"" +
         detail::format_double(plot_w) + "\" height=\"" + detail::format_double(plot_h) +
         "\" fill=\"none\" stroke=\"#ccc\"/>\n";
  out += polyline(rr.y_bar, "#888888");
  out += polyline(rr.y_hat, "#1f77b4");
  out += "  <text x=\"" + std::to_string(ml) + "\" y=\"" + std::to_string(h - 12) +
         "\" font-family=\"sans-serif\" font-size=\"13\">tick (target: grey, measured "
         "aggregate: blue); y in [" +
         detail::format_double(lo) + ", " + detail::format_double(hi) + "] kW</text>\n";
  out += "</svg>\n";
  os << out;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + path);
  return os;
}

}  // namespace

void emit_results(const RunResults& rr, const BuiltScenario& built, const std::string& outdir) {
  std::filesystem::create_directories(outdir);
  {
    std::ofstream os = open_out(outdir + "/traces.csv");
    write_traces_csv(rr, os);
  }
  {
    std::ofstream os = open_out(outdir + "/metrics.json");
    write_metrics_json(rr.metrics, os);
  }
  {
    std::ofstream os = open_out(outdir + "/metrics.csv");
    write_metrics_csv(rr.metrics, os);
  }
  if (built.config.figures) {
    std::ofstream os = open_out(outdir + "/tracking.svg");
    write_tracking_svg(rr, os);
  }
}

}  // namespace dersim
