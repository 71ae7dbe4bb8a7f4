#pragma once

#include <iosfwd>
#include <span>
#include <utility>
#include <vector>

namespace dersim {

// Smoothed joint PDF estimate over the window. Entries are NOT renormalized
// when the window is partially full: p = (C + eps) / D with the fixed
// denominator D = K + 1 + eps*m*n, so early estimates undersum deliberately
// and the incoming sample always carries weight 1/D.
struct PdfEstimates {
  int m = 0, n = 0;
  std::vector<double> p;   // m x n joint, row-major
  std::vector<double> px;  // m, consumer-load marginal
  std::vector<double> py;  // n, grid-load marginal
  double d = 0.0;          // smoothing denominator
};

// Sliding count window over the last K completed (i*, z-row) samples. The
// capacity parameter is the advertised sample size K+1: K stored entries
// plus the yet-undecided current slot, which is never in the counts but is
// charged to D.
class HistogramWindow {
 public:
  // sample_size = K + 1 >= 1; smoothing eps > 0.
  HistogramWindow(int m, int n, int sample_size, double smoothing);

  // Appends a completed sample: i_star is the 1-based x-bin, z_row holds n
  // fractional y-bin weights summing to 1 within 1e-9, entries in [0, 1].
  // Evicts the oldest entry once more than K are stored.
  void update(int i_star, std::span<const double> z_row);

  PdfEstimates pdf() const;

  int m() const { return m_; }
  int n() const { return n_; }
  int sample_size() const { return k_ + 1; }
  int completed() const { return static_cast<int>(entries_.size()); }
  double smoothing() const { return eps_; }
  const std::vector<double>& counts() const { return counts_; }

  // Oldest-first copy of the stored samples; test/debug surface.
  std::vector<std::pair<int, std::vector<double>>> entries() const;

  // Debug dump: header row of y-bin edge labels is the caller's business;
  // this writes one CSV row per x-bin of the count matrix.
  void dump_csv(std::ostream& os) const;

 private:
  int m_, n_, k_;  // k_ = stored-entry capacity K
  double eps_;
  std::vector<double> counts_;  // m x n, fractional
  std::vector<std::pair<int, std::vector<double>>> entries_;
  std::size_t head_ = 0;  // ring index of the oldest entry once full
};

}  // namespace dersim
