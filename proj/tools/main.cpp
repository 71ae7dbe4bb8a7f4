#include <algorithm>
#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "dersim/aggregator.hpp"
#include "dersim/config.hpp"
#include "dersim/metrics.hpp"
#include "dersim/simulation.hpp"
#include "dersim/traces.hpp"
#include "text_io.hpp"

namespace {

namespace fs = std::filesystem;

double parse_cell(const std::string& cell, const std::string& path, std::size_t line) {
  double v = 0.0;
  const char* b = cell.data();
  const char* e = b + cell.size();
  auto [p, ec] = std::from_chars(b, e, v);
  if (ec != std::errc() || p != e)
    throw std::runtime_error(path + ":" + std::to_string(line) + ": bad number '" + cell + "'");
  return v;
}

std::vector<std::string> split_row(const std::string& line) {
  std::vector<std::string> cells;
  std::size_t pos = 0;
  while (true) {
    const std::size_t comma = line.find(',', pos);
    if (comma == std::string::npos) {
      cells.push_back(line.substr(pos));
      return cells;
    }
    cells.push_back(line.substr(pos, comma - pos));
    pos = comma + 1;
  }
}

// Column layout written by the simulator: four aggregate columns, then nine
// per household, ids recovered from the x_<id> headers.
struct TraceTable {
  std::vector<std::string> ids;
  std::vector<double> y_hat, y_bar;
  std::vector<std::vector<double>> x, y, y_ref;
};

TraceTable read_trace_table(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot read " + path);
  std::string line;
  if (!std::getline(is, line)) throw std::runtime_error(path + ": empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const std::vector<std::string> head = split_row(line);
  if (head.size() < 13 || (head.size() - 4) % 9 != 0 || head[0] != "tick" ||
      head[1] != "y_bar" || head[2] != "y_hat" || head[3] != "e_signal")
    throw std::runtime_error(path + ": not a simulator trace table");
  TraceTable t;
  const std::size_t nh = (head.size() - 4) / 9;
  for (std::size_t l = 0; l < nh; ++l) {
    const std::string& xcol = head[4 + 9 * l];
    if (xcol.rfind("x_", 0) != 0)
      throw std::runtime_error(path + ": malformed household columns at '" + xcol + "'");
    t.ids.push_back(xcol.substr(2));
  }
  t.x.resize(nh);
  t.y.resize(nh);
  t.y_ref.resize(nh);
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::vector<std::string> cells = split_row(line);
    if (cells.size() != head.size())
      throw std::runtime_error(path + ":" + std::to_string(lineno) + ": wrong column count");
    t.y_bar.push_back(parse_cell(cells[1], path, lineno));
    t.y_hat.push_back(parse_cell(cells[2], path, lineno));
    for (std::size_t l = 0; l < nh; ++l) {
      const std::size_t o = 4 + 9 * l;
      t.x[l].push_back(parse_cell(cells[o], path, lineno));
      t.y[l].push_back(parse_cell(cells[o + 2], path, lineno));
      t.y_ref[l].push_back(parse_cell(cells[o + 3], path, lineno));
    }
  }
  if (t.y_hat.empty()) throw std::runtime_error(path + ": no data rows");
  return t;
}

dersim::ScenarioConfig load_config(const std::string& path) {
  dersim::ScenarioConfig cfg = dersim::parse_scenario_config(path);
  cfg.validate();
  return cfg;
}

void print_summary(const char* what, const dersim::RunResults& rr) {
  std::ostringstream os;
  os << what << ": ticks=" << rr.ticks << " nrmse_pct=" << rr.metrics.nrmse
     << " mape_pct=" << rr.metrics.mape << " i_iid_avg=" << rr.metrics.i_iid_avg
     << " wall_ms=" << rr.wall_ms;
  std::cout << os.str() << "\n";
}

int run_simulate(const std::string& config, const std::string& out, bool benchmark) {
  const dersim::ScenarioConfig cfg = load_config(config);
  const dersim::BuiltScenario built = dersim::build_scenario(cfg);
  const dersim::RunResults rr =
      benchmark ? dersim::run_benchmark(built) : dersim::run_scenario(built);
  dersim::emit_results(rr, built, out.empty() ? cfg.output_dir : out);
  print_summary(benchmark ? "benchmark" : "simulate", rr);
  return 0;
}

int run_metrics(const std::string& traces, int resolution_s, const std::string& out,
                int discard_s, int dt_s, int x_bins, int y_bins, double y_max) {
  const TraceTable t = read_trace_table(traces);
  if (resolution_s % dt_s != 0)
    throw std::runtime_error("metrics: resolution must be a multiple of the tick length");
  if (discard_s % dt_s != 0)
    throw std::runtime_error("metrics: discard must be a multiple of the tick length");
  const std::size_t skip = static_cast<std::size_t>(discard_s / dt_s);
  if (skip >= t.y_hat.size())
    throw std::runtime_error("metrics: discard window swallows the whole table");

  dersim::MetricsInput in;
  in.resolution_s = resolution_s / dt_s;
  in.x_bins = x_bins;
  in.y_bins = y_bins;
  in.ids = t.ids;
  auto tail = [skip](const std::vector<double>& v) {
    return std::vector<double>(v.begin() + static_cast<std::ptrdiff_t>(skip), v.end());
  };
  for (std::size_t l = 0; l < t.ids.size(); ++l) {
    in.x.push_back(tail(t.x[l]));
    in.y.push_back(tail(t.y[l]));
    in.y_ref.push_back(tail(t.y_ref[l]));
    // Box bound is a scenario parameter the table does not carry; fall back
    // to the observed peak so the normalization stays per household.
    in.y_max_kw.push_back(y_max > 0.0
                              ? y_max
                              : *std::max_element(in.y.back().begin(), in.y.back().end()));
  }
  in.y_hat = tail(t.y_hat);
  in.y_bar = tail(t.y_bar);

  dersim::MetricsReport r = dersim::build_metrics(in);
  r.resolution_s = resolution_s;
  fs::create_directories(out);
  {
    std::ofstream os(out + "/metrics.json", std::ios::binary);
    if (!os) throw std::runtime_error("cannot write " + out + "/metrics.json");
    dersim::write_metrics_json(r, os);
  }
  {
    std::ofstream os(out + "/metrics.csv", std::ios::binary);
    if (!os) throw std::runtime_error("cannot write " + out + "/metrics.csv");
    dersim::write_metrics_csv(r, os);
  }
  std::ostringstream os;
  os << "metrics: households=" << t.ids.size() << " resolution_s=" << resolution_s
     << " nrmse_pct=" << r.nrmse;
  std::cout << os.str() << "\n";
  return 0;
}

void write_or_stdout(const std::string& out, const std::string& body) {
  if (out.empty()) {
    std::cout << body;
    return;
  }
  std::ofstream os(out, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + out);
  os << body;
}

int run_gen_target(const std::string& config, std::uint64_t seed, const std::string& out) {
  dersim::ScenarioConfig cfg = load_config(config);
  cfg.seed_target = seed;
  const dersim::BuiltScenario built = dersim::build_scenario(cfg);
  std::string body = "t_s,y_bar_kw\n";
  for (std::size_t w = 0; w < built.target.values_kw.size(); ++w) {
    body += std::to_string(static_cast<long long>(w) * built.target.target_dt_s);
    body.push_back(',');
    dersim::detail::append_double(body, built.target.values_kw[w]);
    body.push_back('\n');
  }
  write_or_stdout(out, body);
  return 0;
}

int run_gen_schedule(const std::string& trace, const std::string& out) {
  const dersim::LoadTrace tr = dersim::parse_trace_csv(trace);
  const std::vector<double> sched = dersim::generate_day_ahead(tr);
  std::string body = "window_start_s,mean_kw\n";
  for (std::size_t w = 0; w < sched.size(); ++w) {
    body += std::to_string(static_cast<long long>(w) * 1800);
    body.push_back(',');
    dersim::detail::append_double(body, sched[w]);
    body.push_back('\n');
  }
  write_or_stdout(out, body);
  return 0;
}

int run_ingest(std::vector<std::string> inputs, int n, std::uint64_t seed,
               const std::string& out) {
  if (inputs.size() == 1 && fs::is_directory(inputs.front())) {
    const std::string dir = inputs.front();
    inputs.clear();
    for (const fs::directory_entry& e : fs::directory_iterator(dir))
      if (e.is_regular_file() && e.path().extension() == ".csv")
        inputs.push_back(e.path().string());
    std::sort(inputs.begin(), inputs.end());
    if (inputs.empty()) throw std::runtime_error("ingest: no .csv files in " + dir);
  }
  const std::vector<dersim::LoadTrace> traces = dersim::ingest_traces(inputs, n, seed);
  fs::create_directories(out);
  for (const dersim::LoadTrace& tr : traces) {
    const std::string path = out + "/" + tr.id + ".csv";
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write " + path);
    dersim::write_trace_csv(tr, os);
  }
  std::cout << "ingest: wrote " << traces.size() << " traces to " << out << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"deterministic simulator for privacy-aware battery fleets tracking a target"};
  app.require_subcommand(1);

  std::string config, out, traces_path, trace_path;
  std::string resolution = "1s";
  std::vector<std::string> inputs;
  int n = 20, discard_s = 1800, dt_s = 1, x_bins = 15, y_bins = 15;
  double y_max = 0.0;
  std::uint64_t seed = 1;

  CLI::App* sim = app.add_subcommand("simulate", "run the distributed control loop");
  sim->add_option("--config", config, "scenario ini file")->required();
  sim->add_option("--out", out, "output directory (default: the config's output dir)");

  CLI::App* bench = app.add_subcommand("benchmark", "run the full-information baseline");
  bench->add_option("--config", config, "scenario ini file")->required();
  bench->add_option("--out", out, "output directory (default: the config's output dir)");

  CLI::App* met = app.add_subcommand("metrics", "recompute metrics from a trace table");
  met->add_option("--traces", traces_path, "traces.csv from a previous run")->required();
  met->add_option("--resolution", resolution, "metering resolution")
      ->check(CLI::IsMember({"1s", "1m", "5m"}));
  met->add_option("--out", out, "output directory")->required();
  met->add_option("--discard", discard_s, "warm-up seconds to drop (default 1800)");
  met->add_option("--dt", dt_s, "seconds per table row (default 1)");
  met->add_option("--x-bins", x_bins, "load histogram bins (default 15)");
  met->add_option("--y-bins", y_bins, "grid-load histogram bins (default 15)");
  met->add_option("--y-max", y_max, "box bound for deviation normalization (default: observed peak)");

  CLI::App* gt = app.add_subcommand("gen-target", "emit the aggregate target profile");
  gt->add_option("--config", config, "scenario ini file")->required();
  gt->add_option("--seed", seed, "target perturbation seed")->required();
  gt->add_option("--out", out, "output csv (default: stdout)");

  CLI::App* gs = app.add_subcommand("gen-schedule", "emit a trace's half-hour reference schedule");
  gs->add_option("--trace", trace_path, "load trace csv")->required();
  gs->add_option("--out", out, "output csv (default: stdout)");

  CLI::App* ing = app.add_subcommand("ingest", "normalize and replicate load traces");
  ing->add_option("--in", inputs, "trace csv files, or one directory of them")->required();
  ing->add_option("--n", n, "household count to produce")->required();
  ing->add_option("--seed", seed, "replica day-shift seed")->required();
  ing->add_option("--out", out, "output directory (default: ingested)");

  CLI11_PARSE(app, argc, argv);

  const std::map<std::string, int> res_map{{"1s", 1}, {"1m", 60}, {"5m", 300}};
  try {
    if (sim->parsed()) return run_simulate(config, out, false);
    if (bench->parsed()) return run_simulate(config, out, true);
    if (met->parsed())
      return run_metrics(traces_path, res_map.at(resolution), out, discard_s, dt_s, x_bins,
                         y_bins, y_max);
    if (gt->parsed()) return run_gen_target(config, seed, out);
    if (gs->parsed()) return run_gen_schedule(trace_path, out);
    if (ing->parsed()) return run_ingest(inputs, n, seed, out.empty() ? "ingested" : out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
