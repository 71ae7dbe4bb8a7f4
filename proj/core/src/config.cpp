#include "dersim/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <stdexcept>
#include <string_view>

namespace dersim {

namespace {

std::string_view trim(std::string_view sv) {
  while (!sv.empty() && (sv.front() == ' ' || sv.front() == '\t')) sv.remove_prefix(1);
  while (!sv.empty() && (sv.back() == ' ' || sv.back() == '\t' || sv.back() == '\r'))
    sv.remove_suffix(1);
  return sv;
}

struct Cursor {
  const std::string& path;
  std::size_t line = 0;

  [[noreturn]] void fail(const std::string& what) const {
    throw std::runtime_error(path + ":" + std::to_string(line) + ": " + what);
  }
};

double parse_double(std::string_view v, const Cursor& at) {
  double out = 0.0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc() || res.ptr != v.data() + v.size() || !std::isfinite(out))
    at.fail("expected a number, got '" + std::string(v) + "'");
  return out;
}

int parse_int(std::string_view v, const Cursor& at) {
  int out = 0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc() || res.ptr != v.data() + v.size())
    at.fail("expected an integer, got '" + std::string(v) + "'");
  return out;
}

std::uint64_t parse_u64(std::string_view v, const Cursor& at) {
  std::uint64_t out = 0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc() || res.ptr != v.data() + v.size())
    at.fail("expected an unsigned integer, got '" + std::string(v) + "'");
  return out;
}

bool parse_bool(std::string_view v, const Cursor& at) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  at.fail("expected true/false, got '" + std::string(v) + "'");
}

template <typename F>
void split_list(std::string_view v, F&& per_item) {
  while (!v.empty()) {
    const std::size_t comma = v.find(',');
    per_item(trim(v.substr(0, comma)));
    if (comma == std::string_view::npos) break;
    v.remove_prefix(comma + 1);
  }
}

void apply(ScenarioConfig& c, const std::string& section, std::string_view key,
           std::string_view value, const Cursor& at) {
  auto unknown = [&]() {
    at.fail("unknown key '" + std::string(key) + "' in section [" + section + "]");
  };
  if (section == "timing") {
    if (key == "control_dt_s") c.timing.control_dt_s = parse_int(value, at);
    else if (key == "forecast_dt_s") c.timing.forecast_dt_s = parse_int(value, at);
    else if (key == "target_dt_s") c.timing.target_dt_s = parse_int(value, at);
    else if (key == "horizon_s") c.timing.horizon_s = parse_int(value, at);
    else if (key == "discard_s") c.timing.discard_s = parse_int(value, at);
    else unknown();
  } else if (section == "controller") {
    if (key == "step_size") c.controller.step_size = parse_double(value, at);
    else if (key == "sigma1") c.controller.sigma1 = parse_double(value, at);
    else if (key == "sigma2") c.controller.sigma2 = parse_double(value, at);
    else unknown();
  } else if (section == "privacy") {
    if (key == "window_size") c.window_size = parse_int(value, at);
    else if (key == "x_bins") c.x_bins = parse_int(value, at);
    else if (key == "y_bins") c.y_bins = parse_int(value, at);
    else if (key == "smoothing") c.smoothing = parse_double(value, at);
    else if (key == "mu_min") c.mu_min = parse_int(value, at);
    else if (key == "mu_max") c.mu_max = parse_int(value, at);
    else if (key == "mu_values") {
      c.mu_values.clear();
      split_list(value, [&](std::string_view item) {
        if (!item.empty()) c.mu_values.push_back(parse_double(item, at));
      });
    } else unknown();
  } else if (section == "battery") {
    if (key == "capacity_kwh") c.battery.capacity_kwh = parse_double(value, at);
    else if (key == "max_charge_kw") c.battery.max_charge_kw = parse_double(value, at);
    else if (key == "max_discharge_kw") c.battery.max_discharge_kw = parse_double(value, at);
    else if (key == "efficiency") c.battery.efficiency = parse_double(value, at);
    else if (key == "initial_soc_kwh") c.initial_soc_kwh = parse_double(value, at);
    else unknown();
  } else if (section == "household") {
    if (key == "count") c.households = parse_int(value, at);
    else if (key == "reserve_kw") c.reserve_kw = parse_double(value, at);
    else if (key == "y_min_kw") c.y_min_kw = parse_double(value, at);
    else if (key == "y_max_kw") c.y_max_kw = parse_double(value, at);
    else unknown();
  } else if (section == "seeds") {
    if (key == "target") c.seed_target = parse_u64(value, at);
    else if (key == "mu") c.seed_mu = parse_u64(value, at);
    else if (key == "traces") c.seed_traces = parse_u64(value, at);
    else if (key == "noise") c.seed_noise = parse_u64(value, at);
    else unknown();
  } else if (section == "traces") {
    if (key == "dir") c.trace_dir = std::string(value);
    else if (key == "files") {
      c.trace_files.clear();
      split_list(value, [&](std::string_view item) {
        if (!item.empty()) c.trace_files.emplace_back(item);
      });
    } else unknown();
  } else if (section == "aggregator") {
    if (key == "measurement_noise_std") c.measurement_noise_std = parse_double(value, at);
    else unknown();
  } else if (section == "output") {
    if (key == "dir") c.output_dir = std::string(value);
    else if (key == "figures") c.figures = parse_bool(value, at);
    else unknown();
  } else {
    at.fail("unknown section [" + section + "]");
  }
}

}  // namespace

void ScenarioConfig::validate() const {
  timing.validate();
  controller.validate();
  battery.validate();
  if (households < 1) throw std::invalid_argument("config: household count must be >= 1");
  if (!(reserve_kw >= 0.0)) throw std::invalid_argument("config: reserve must be >= 0");
  if (y_max_kw != 0.0 && y_max_kw <= y_min_kw)
    throw std::invalid_argument("config: y_max must exceed y_min when set");
  if (!(initial_soc_kwh >= 0.0) || initial_soc_kwh > battery.capacity_kwh)
    throw std::invalid_argument("config: initial SoC outside [0, capacity]");
  if (window_size < 1) throw std::invalid_argument("config: window size must be >= 1");
  if (x_bins < 1 || y_bins < 1) throw std::invalid_argument("config: bin counts must be >= 1");
  if (!(smoothing > 0.0)) throw std::invalid_argument("config: smoothing must be positive");
  if (mu_min < 0 || mu_max < mu_min)
    throw std::invalid_argument("config: privacy price range must satisfy 0 <= mu_min <= mu_max");
  if (!mu_values.empty() && static_cast<int>(mu_values.size()) != households)
    throw std::invalid_argument("config: mu_values must list one price per household");
  for (double mu : mu_values)
    if (!(mu >= 0.0)) throw std::invalid_argument("config: privacy prices must be >= 0");
  if (!(measurement_noise_std >= 0.0))
    throw std::invalid_argument("config: measurement noise must be >= 0");
  if (output_dir.empty()) throw std::invalid_argument("config: output dir must be set");
}

std::vector<std::string> ScenarioConfig::trace_paths() const {
  std::vector<std::string> out;
  out.reserve(trace_files.size());
  for (const std::string& f : trace_files) {
    if (trace_dir.empty()) {
      out.push_back(f);
    } else if (trace_dir.back() == '/') {
      out.push_back(trace_dir + f);
    } else {
      out.push_back(trace_dir + "/" + f);
    }
  }
  return out;
}

ScenarioConfig parse_scenario_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("config: cannot open " + path);

  ScenarioConfig c;
  Cursor at{path, 0};
  std::string section;
  std::string line;
  while (std::getline(in, line)) {
    ++at.line;
    const std::string_view sv = trim(line);
    if (sv.empty() || sv.front() == '#' || sv.front() == ';') continue;
    if (sv.front() == '[') {
      if (sv.back() != ']' || sv.size() < 3) at.fail("malformed section header");
      section = std::string(trim(sv.substr(1, sv.size() - 2)));
      continue;
    }
    const std::size_t eq = sv.find('=');
    if (eq == std::string_view::npos) at.fail("expected key = value");
    if (section.empty()) at.fail("key outside any section");
    const std::string_view key = trim(sv.substr(0, eq));
    const std::string_view value = trim(sv.substr(eq + 1));
    if (key.empty()) at.fail("empty key");
    apply(c, section, key, value, at);
  }
  try {
    c.validate();
  } catch (const std::invalid_argument& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
  return c;
}

}  // namespace dersim
