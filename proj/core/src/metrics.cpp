#include "dersim/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>
#include <unordered_map>

#include "text_io.hpp"

namespace dersim {

namespace {

double mean_of(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

void require_paired(std::span<const double> a, std::span<const double> b, const char* what) {
  if (a.size() != b.size() || a.empty())
    throw std::invalid_argument(std::string("metrics: ") + what +
                                " needs two non-empty series of equal length");
}

// Equal-width labels over the observed range, 1-based; a degenerate range
// collapses to a single label.
std::vector<int> bin_series(std::span<const double> v, int bins, const char* what) {
  if (bins < 1) throw std::invalid_argument(std::string("metrics: ") + what + " needs bins >= 1");
  double lo = v[0], hi = v[0];
  for (double x : v) {
    if (!std::isfinite(x))
      throw std::invalid_argument(std::string("metrics: ") + what + " series has a non-finite value");
    lo = std::min(lo, x);
    hi = std::max(hi, x);
  }
  const double range = hi - lo;
  std::vector<int> out(v.size(), 1);
  if (range <= 0.0) return out;
  for (std::size_t k = 0; k < v.size(); ++k) {
    const int j = 1 + static_cast<int>(std::floor((v[k] - lo) / range * bins));
    out[k] = std::clamp(j, 1, bins);
  }
  return out;
}

// Plug-in MI of two 1-based label series; joint counts kept sparse so pair
// alphabets (bins squared) stay cheap.
double plug_in_mi(std::span<const int> a, std::span<const int> b, int na, int nb) {
  const double t = static_cast<double>(a.size());
  std::unordered_map<long long, double> joint;
  joint.reserve(a.size());
  std::vector<double> ca(static_cast<std::size_t>(na), 0.0);
  std::vector<double> cb(static_cast<std::size_t>(nb), 0.0);
  for (std::size_t k = 0; k < a.size(); ++k) {
    joint[static_cast<long long>(a[k] - 1) * nb + (b[k] - 1)] += 1.0;
    ca[static_cast<std::size_t>(a[k] - 1)] += 1.0;
    cb[static_cast<std::size_t>(b[k] - 1)] += 1.0;
  }
  double mi = 0.0;
  for (const auto& [key, c] : joint) {
    const long long i = key / nb, j = key % nb;
    // 0 log 0 = 0: empty cells are simply absent from the sparse table.
    mi += (c / t) * std::log2(c * t / (ca[static_cast<std::size_t>(i)] *
                                       cb[static_cast<std::size_t>(j)]));
  }
  return mi;
}

double range_of(std::span<const double> v) {
  const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  return *hi - *lo;
}

}  // namespace

double nrmse(std::span<const double> y_hat, std::span<const double> y_bar) {
  require_paired(y_hat, y_bar, "nrmse");
  const double m = mean_of(y_bar);
  if (m == 0.0) throw std::invalid_argument("metrics: nrmse target mean is zero");
  double sq = 0.0;
  for (std::size_t k = 0; k < y_hat.size(); ++k) {
    const double d = y_hat[k] - y_bar[k];
    sq += d * d;
  }
  return 100.0 * std::sqrt(sq / static_cast<double>(y_hat.size())) / m;
}

double mape(std::span<const double> y_hat, std::span<const double> y_bar) {
  require_paired(y_hat, y_bar, "mape");
  double acc = 0.0;
  for (std::size_t k = 0; k < y_hat.size(); ++k) {
    if (y_bar[k] == 0.0) throw std::invalid_argument("metrics: mape target sample is zero");
    acc += std::abs((y_hat[k] - y_bar[k]) / y_bar[k]);
  }
  return 100.0 * acc / static_cast<double>(y_hat.size());
}

double nmae(std::span<const double> y, std::span<const double> y_ref, double y_max_kw) {
  require_paired(y, y_ref, "nmae");
  if (!(y_max_kw > 0.0)) throw std::invalid_argument("metrics: nmae needs y_max > 0");
  double acc = 0.0;
  for (std::size_t k = 0; k < y.size(); ++k) acc += std::abs(y[k] - y_ref[k]);
  return 100.0 * acc / (static_cast<double>(y.size()) * y_max_kw);
}

double mi_iid(std::span<const double> x, std::span<const double> y, int m, int n) {
  require_paired(x, y, "mi_iid");
  if (x.size() < 2) throw std::invalid_argument("metrics: mi_iid needs at least 2 samples");
  const std::vector<int> a = bin_series(x, m, "mi_iid");
  const std::vector<int> b = bin_series(y, n, "mi_iid");
  return plug_in_mi(a, b, m, n);
}

double mi_markov(std::span<const double> x, std::span<const double> y, int m, int n) {
  require_paired(x, y, "mi_markov");
  if (x.size() < 3) throw std::invalid_argument("metrics: mi_markov needs at least 3 samples");
  const std::vector<int> a = bin_series(x, m, "mi_markov");
  const std::vector<int> b = bin_series(y, n, "mi_markov");
  const std::size_t t = a.size() - 1;
  std::vector<int> pa(t), pb(t), sa(t), sb(t);
  for (std::size_t k = 0; k < t; ++k) {
    pa[k] = (a[k] - 1) * m + a[k + 1];
    pb[k] = (b[k] - 1) * n + b[k + 1];
    sa[k] = a[k];
    sb[k] = b[k];
  }
  const double i_pair = plug_in_mi(pa, pb, m * m, n * n);
  const double i_single = plug_in_mi(sa, sb, m, n);
  return std::max(0.0, i_pair - i_single);
}

std::vector<double> aggregate_series(std::span<const double> series, int factor) {
  if (factor < 1) throw std::invalid_argument("metrics: aggregation factor must be >= 1");
  const std::size_t blocks = series.size() / static_cast<std::size_t>(factor);
  std::vector<double> out(blocks, 0.0);
  for (std::size_t k = 0; k < blocks; ++k) {
    double s = 0.0;
    for (int i = 0; i < factor; ++i) s += series[k * static_cast<std::size_t>(factor) +
                                                static_cast<std::size_t>(i)];
    out[k] = s / factor;
  }
  return out;
}

CompensatedLoads compensate_loads(std::span<const double> y, std::span<const double> y_hat,
                                  std::span<const double> y_bar,
                                  std::span<const double> y_ref) {
  require_paired(y, y_hat, "compensate_loads");
  require_paired(y, y_bar, "compensate_loads");
  require_paired(y, y_ref, "compensate_loads");
  const double m_hat = mean_of(y_hat);
  if (m_hat == 0.0)
    throw std::invalid_argument("metrics: compensate_loads aggregate mean is zero");
  const double share = mean_of(y) / m_hat;
  CompensatedLoads out;
  out.g.resize(y.size());
  out.d.resize(y.size());
  out.dg.resize(y.size());
  for (std::size_t k = 0; k < y.size(); ++k) {
    out.g[k] = y[k] - (y_hat[k] - y_bar[k]) * share;
    out.d[k] = y[k] - y_ref[k];
    out.dg[k] = out.g[k] - y_ref[k];
  }
  return out;
}

int scaled_bins(int bins, double base_range, double new_range) {
  if (bins < 1) throw std::invalid_argument("metrics: scaled_bins needs bins >= 1");
  if (!(base_range > 0.0) || new_range <= base_range) return bins;
  constexpr int kMaxBins = 1024;  // pair alphabets are bins squared
  const long scaled = std::lround(bins * new_range / base_range);
  return static_cast<int>(std::clamp(scaled, static_cast<long>(bins),
                                     static_cast<long>(kMaxBins)));
}

MetricsReport build_metrics(const MetricsInput& in) {
  const std::size_t nh = in.x.size();
  if (nh == 0 || in.y.size() != nh || in.y_ref.size() != nh || in.ids.size() != nh ||
      in.y_max_kw.size() != nh)
    throw std::invalid_argument("metrics: per-household inputs disagree on household count");
  if (in.resolution_s < 1) throw std::invalid_argument("metrics: resolution must be >= 1 s");
  const std::size_t len = in.y_hat.size();
  if (in.y_bar.size() != len || len == 0)
    throw std::invalid_argument("metrics: aggregate series disagree on length");
  for (std::size_t l = 0; l < nh; ++l)
    if (in.x[l].size() != len || in.y[l].size() != len || in.y_ref[l].size() != len)
      throw std::invalid_argument("metrics: household series disagree on length");

  MetricsReport r;
  r.resolution_s = in.resolution_s;
  const std::vector<double> ah = aggregate_series(in.y_hat, in.resolution_s);
  const std::vector<double> ab = aggregate_series(in.y_bar, in.resolution_s);
  r.nrmse = nrmse(ah, ab);
  r.mape = mape(ah, ab);

  r.households.resize(nh);
  for (std::size_t l = 0; l < nh; ++l) {
    HouseholdMetrics& hm = r.households[l];
    hm.id = in.ids[l];
    const std::vector<double> ax = aggregate_series(in.x[l], in.resolution_s);
    const std::vector<double> ay = aggregate_series(in.y[l], in.resolution_s);
    const std::vector<double> ar = aggregate_series(in.y_ref[l], in.resolution_s);
    const CompensatedLoads comp = compensate_loads(ay, ah, ab, ar);

    hm.nmae = nmae(ay, ar, in.y_max_kw[l]);
    const double base = range_of(ay);
    const int n_g = scaled_bins(in.y_bins, base, range_of(comp.g));
    const int n_d = scaled_bins(in.y_bins, base, range_of(comp.d));
    const int n_dg = scaled_bins(in.y_bins, base, range_of(comp.dg));
    hm.i_iid = mi_iid(ax, ay, in.x_bins, in.y_bins);
    hm.i_mk = mi_markov(ax, ay, in.x_bins, in.y_bins);
    hm.i_iid_g = mi_iid(ax, comp.g, in.x_bins, n_g);
    hm.i_mk_g = mi_markov(ax, comp.g, in.x_bins, n_g);
    hm.i_iid_d = mi_iid(ax, comp.d, in.x_bins, n_d);
    hm.i_mk_d = mi_markov(ax, comp.d, in.x_bins, n_d);
    hm.i_iid_dg = mi_iid(ax, comp.dg, in.x_bins, n_dg);
    hm.i_mk_dg = mi_markov(ax, comp.dg, in.x_bins, n_dg);

    r.nmae_avg += hm.nmae;
    r.i_iid_avg += hm.i_iid;
    r.i_mk_avg += hm.i_mk;
    r.i_iid_g_avg += hm.i_iid_g;
    r.i_mk_g_avg += hm.i_mk_g;
    r.i_iid_d_avg += hm.i_iid_d;
    r.i_mk_d_avg += hm.i_mk_d;
    r.i_iid_dg_avg += hm.i_iid_dg;
    r.i_mk_dg_avg += hm.i_mk_dg;
  }
  const double inv = 1.0 / static_cast<double>(nh);
  r.nmae_avg *= inv;
  r.i_iid_avg *= inv;
  r.i_mk_avg *= inv;
  r.i_iid_g_avg *= inv;
  r.i_mk_g_avg *= inv;
  r.i_iid_d_avg *= inv;
  r.i_mk_d_avg *= inv;
  r.i_iid_dg_avg *= inv;
  r.i_mk_dg_avg *= inv;
  return r;
}

namespace {

void json_escape(const std::string& s, std::string& out) {
  for (char ch : s) {
    if (ch == '"' || ch == '\\') {
      out.push_back('\\');
      out.push_back(ch);
    } else if (static_cast<unsigned char>(ch) < 0x20) {
      out.push_back(' ');
    } else {
      out.push_back(ch);
    }
  }
}

void json_pair(std::string& out, const std::string& key, double value, bool& first) {
  if (!first) out += ",\n";
  first = false;
  out += "  \"";
  json_escape(key, out);
  out += "\": ";
  detail::append_double(out, value);
}

}  // namespace

void write_metrics_json(const MetricsReport& r, std::ostream& os) {
  std::string out = "{\n";
  bool first = true;
  json_pair(out, "resolution_s", r.resolution_s, first);
  json_pair(out, "nrmse", r.nrmse, first);
  json_pair(out, "mape", r.mape, first);
  json_pair(out, "nmae_avg", r.nmae_avg, first);
  json_pair(out, "i_iid_avg", r.i_iid_avg, first);
  json_pair(out, "i_mk_avg", r.i_mk_avg, first);
  json_pair(out, "i_iid_g_avg", r.i_iid_g_avg, first);
  json_pair(out, "i_mk_g_avg", r.i_mk_g_avg, first);
  json_pair(out, "i_iid_d_avg", r.i_iid_d_avg, first);
  json_pair(out, "i_mk_d_avg", r.i_mk_d_avg, first);
  json_pair(out, "i_iid_dg_avg", r.i_iid_dg_avg, first);
  json_pair(out, "i_mk_dg_avg", r.i_mk_dg_avg, first);
  for (const HouseholdMetrics& h : r.households) {
    json_pair(out, h.id + "_nmae", h.nmae, first);
    json_pair(out, h.id + "_i_iid", h.i_iid, first);
    json_pair(out, h.id + "_i_mk", h.i_mk, first);
    json_pair(out, h.id + "_i_iid_g", h.i_iid_g, first);
    json_pair(out, h.id + "_i_mk_g", h.i_mk_g, first);
    json_pair(out, h.id + "_i_iid_d", h.i_iid_d, first);
    json_pair(out, h.id + "_i_mk_d", h.i_mk_d, first);
    json_pair(out, h.id + "_i_iid_dg", h.i_iid_dg, first);
    json_pair(out, h.id + "_i_mk_dg", h.i_mk_dg, first);
  }
  out += "\n}\n";
  os << out;
}

void write_metrics_csv(const MetricsReport& r, std::ostream& os) {
  std::string out = "id,nmae,i_iid,i_mk,i_iid_g,i_mk_g,i_iid_d,i_mk_d,i_iid_dg,i_mk_dg\n";
  auto row = [&out](const std::string& id, std::initializer_list<double> vals) {
    out += id;
    for (double v : vals) {
      out.push_back(',');
      detail::append_double(out, v);
    }
    out.push_back('\n');
  };
  for (const HouseholdMetrics& h : r.households)
    row(h.id, {h.nmae, h.i_iid, h.i_mk, h.i_iid_g, h.i_mk_g, h.i_iid_d, h.i_mk_d, h.i_iid_dg,
               h.i_mk_dg});
  row("avg", {r.nmae_avg, r.i_iid_avg, r.i_mk_avg, r.i_iid_g_avg, r.i_mk_g_avg, r.i_iid_d_avg,
              r.i_mk_d_avg, r.i_iid_dg_avg, r.i_mk_dg_avg});
  os << out;
}

}  // namespace dersim
