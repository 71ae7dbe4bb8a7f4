#include "dersim/traces.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <ostream>
#include <stdexcept>
#include <utility>

#include "dersim/rng.hpp"
#include "text_io.hpp"

namespace dersim {

namespace {

constexpr std::size_t kDayTicks = 86400;

[[noreturn]] void row_error(const std::string& path, std::size_t line, const char* what) {
  throw std::runtime_error(path + ":" + std::to_string(line) + ": " + what);
}

// Leading/trailing blanks stripped; from_chars does not skip them itself.
bool parse_field(std::string_view field, double& out) {
  while (!field.empty() && (field.front() == ' ' || field.front() == '\t'))
    field.remove_prefix(1);
  while (!field.empty() && (field.back() == ' ' || field.back() == '\t' || field.back() == '\r'))
    field.remove_suffix(1);
  if (field.empty()) return false;
  const auto res = std::from_chars(field.data(), field.data() + field.size(), out);
  return res.ec == std::errc() && res.ptr == field.data() + field.size();
}

}  // namespace

LoadTrace parse_trace_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("traces: cannot open " + path);

  std::vector<std::pair<std::int64_t, double>> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view sv(line);
    if (!sv.empty() && sv.back() == '\r') sv.remove_suffix(1);
    if (sv.empty()) continue;
    const std::size_t comma = sv.find(',');
    double ts = 0.0, kw = 0.0;
    const bool ok = comma != std::string_view::npos && parse_field(sv.substr(0, comma), ts) &&
                    parse_field(sv.substr(comma + 1,
                                          sv.find(',', comma + 1) == std::string_view::npos
                                              ? std::string_view::npos
                                              : sv.find(',', comma + 1) - comma - 1),
                                kw);
    if (!ok) {
      if (lineno == 1) continue;  // header
      row_error(path, lineno, "unparseable row (want: timestamp,power)");
    }
    if (!std::isfinite(ts) || !std::isfinite(kw)) row_error(path, lineno, "non-finite value");
    if (kw < 0.0) row_error(path, lineno, "negative power");
    rows.emplace_back(static_cast<std::int64_t>(std::floor(ts)), kw);
  }
  if (rows.empty()) throw std::runtime_error(path + ": no data rows");

  // Later rows win on duplicate seconds; stable sort keeps file order.
  std::stable_sort(rows.begin(), rows.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });

  LoadTrace t;
  t.id = path;
  const std::size_t slash = path.find_last_of('/');
  if (slash != std::string::npos) t.id = path.substr(slash + 1);
  const std::size_t dot = t.id.find_last_of('.');
  if (dot != std::string::npos && dot > 0) t.id.resize(dot);
  t.start_time_s = rows.front().first;
  t.dt_s = 1.0;
  t.values.assign(static_cast<std::size_t>(rows.back().first - rows.front().first) + 1, 0.0);
  std::size_t r = 0;
  double held = rows.front().second;
  for (std::size_t k = 0; k < t.values.size(); ++k) {
    const std::int64_t sec = t.start_time_s + static_cast<std::int64_t>(k);
    while (r < rows.size() && rows[r].first <= sec) held = rows[r++].second;
    t.values[k] = held;
  }
  t.validate();
  return t;
}

void write_trace_csv(const LoadTrace& trace, std::ostream& os) {
  std::string out = "timestamp,power_kw\n";
  for (std::size_t k = 0; k < trace.values.size(); ++k) {
    out += std::to_string(trace.start_time_s +
                          static_cast<std::int64_t>(std::llround(k * trace.dt_s)));
    out.push_back(',');
    detail::append_double(out, trace.values[k]);
    out.push_back('\n');
  }
  os << out;
}

std::vector<LoadTrace> ingest_traces(const std::vector<std::string>& paths, int n,
                                     std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("traces: household count must be >= 1");
  if (paths.empty()) throw std::invalid_argument("traces: no input files");

  std::vector<LoadTrace> base;
  base.reserve(paths.size());
  for (const std::string& p : paths) base.push_back(parse_trace_csv(p));

  std::vector<LoadTrace> out;
  out.reserve(static_cast<std::size_t>(n));
  Rng rng(seed);
  for (int k = 0; k < n; ++k) {
    const std::size_t b = static_cast<std::size_t>(k) % base.size();
    if (static_cast<std::size_t>(k) < base.size()) {
      out.push_back(base[b]);
      continue;
    }
    const LoadTrace& src = base[b];
    const std::size_t len = src.values.size();
    std::size_t shift = 0;
    if (len > kDayTicks) {
      const int max_days = static_cast<int>((len - 1) / kDayTicks);
      shift = static_cast<std::size_t>(rng.uniform_int(1, max_days)) * kDayTicks;
    } else if (len >= 2) {
      shift = static_cast<std::size_t>(rng.uniform_int(1, static_cast<int>(len) - 1));
    }
    LoadTrace rep;
    rep.id = src.id + "-d" + std::to_string(static_cast<std::size_t>(k) / base.size());
    rep.start_time_s = src.start_time_s;
    rep.dt_s = src.dt_s;
    rep.values.resize(len);
    for (std::size_t t = 0; t < len; ++t) rep.values[t] = src.values[(t + shift) % len];
    out.push_back(std::move(rep));
  }
  return out;
}

std::vector<LoadTrace> synthesize_traces(int n, int length_s, std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("traces: household count must be >= 1");
  if (length_s < 1) throw std::invalid_argument("traces: length must be >= 1 s");

  constexpr double kTwoPi = 6.283185307179586476925286766559;
  Rng rng(seed);
  int width = 2;
  for (int v = n; v >= 100; v /= 10) ++width;

  std::vector<LoadTrace> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int h = 0; h < n; ++h) {
    LoadTrace t;
    std::string num = std::to_string(h + 1);
    while (static_cast<int>(num.size()) < width) num.insert(num.begin(), '0');
    t.id = "h" + num;
    t.dt_s = 1.0;
    t.values.assign(static_cast<std::size_t>(length_s), 0.0);

    const double base = rng.uniform(0.15, 0.45);
    const double a1 = rng.uniform(0.03, 0.12), p1 = rng.uniform(2400.0, 7200.0);
    const double ph1 = rng.uniform(0.0, kTwoPi);
    const double a2 = rng.uniform(0.02, 0.08), p2 = rng.uniform(900.0, 2400.0);
    const double ph2 = rng.uniform(0.0, kTwoPi);
    const double fr_amp = rng.uniform(0.08, 0.16);
    const int fr_period = rng.uniform_int(1500, 2700);
    const int fr_on = rng.uniform_int(500, fr_period / 2);
    const int fr_phase = rng.uniform_int(0, fr_period - 1);

    // Structural terms are sampled at metering-block starts and held: switch
    // edges must land on the 5 s grid or no solver in the system can see them.
    constexpr int kMeterS = 5;
    for (int k = 0; k < length_s; ++k) {
      const int kb = k - k % kMeterS;
      double v = base + a1 * std::sin(kTwoPi * kb / p1 + ph1) +
                 a2 * std::sin(kTwoPi * kb / p2 + ph2);
      if ((kb + fr_phase) % fr_period < fr_on) v += fr_amp;
      t.values[static_cast<std::size_t>(k)] = v;
    }

    const int ev_lo = std::max(1, length_s / 2700);
    const int ev_hi = std::max(ev_lo, length_s / 1350);
    const int events = rng.uniform_int(ev_lo, ev_hi);
    for (int e = 0; e < events; ++e) {
      const int start = rng.uniform_int(0, length_s - 1);
      const int dur = rng.uniform_int(90, 1500);
      const double amp = rng.uniform(0.3, 2.2);
      for (int k = 0; k < length_s; ++k) {
        const int kb = k - k % kMeterS;
        if (kb >= start && kb < start + dur) t.values[static_cast<std::size_t>(k)] += amp;
      }
    }

    for (int k = 0; k < length_s; ++k) {
      const double v = t.values[static_cast<std::size_t>(k)] + rng.normal(0.0, 0.008);
      t.values[static_cast<std::size_t>(k)] = std::max(0.0, v);
    }
    out.push_back(std::move(t));
  }
  return out;
}

}  // namespace dersim
