#include "dersim/histogram_window.hpp"

#include <cmath>
#include <ostream>
#include <stdexcept>

namespace dersim {

HistogramWindow::HistogramWindow(int m, int n, int sample_size, double smoothing)
    : m_(m), n_(n), k_(sample_size - 1), eps_(smoothing) {
  if (m < 1 || n < 1) throw std::invalid_argument("histogram window: bin counts must be >= 1");
  if (sample_size < 1) throw std::invalid_argument("histogram window: sample size must be >= 1");
  if (!(smoothing > 0.0)) throw std::invalid_argument("histogram window: smoothing must be positive");
  counts_.assign(static_cast<std::size_t>(m_) * n_, 0.0);
  entries_.reserve(static_cast<std::size_t>(k_));
}

void HistogramWindow::update(int i_star, std::span<const double> z_row) {
  if (i_star < 1 || i_star > m_) throw std::invalid_argument("histogram window: i* out of range");
  if (static_cast<int>(z_row.size()) != n_)
    throw std::invalid_argument("histogram window: z-row length mismatch");
  double sum = 0.0;
  for (double z : z_row) {
    if (!std::isfinite(z) || z < -1e-9 || z > 1.0 + 1e-9)
      throw std::invalid_argument("histogram window: z entry outside [0, 1]");
    sum += z;
  }
  if (std::abs(sum - 1.0) > 1e-9)
    throw std::invalid_argument("histogram window: z-row does not sum to 1");
  if (k_ == 0) return;  // zero stored capacity: samples fall straight out

  const std::size_t row = static_cast<std::size_t>(i_star - 1) * n_;
  for (int j = 0; j < n_; ++j) counts_[row + j] += z_row[j];

  if (completed() < k_) {
    entries_.emplace_back(i_star, std::vector<double>(z_row.begin(), z_row.end()));
    return;
  }
  // Ring replacement: the slot at head_ holds the oldest entry.
  auto& old = entries_[head_];
  const std::size_t old_row = static_cast<std::size_t>(old.first - 1) * n_;
  for (int j = 0; j < n_; ++j) counts_[old_row + j] -= old.second[j];
  old.first = i_star;
  old.second.assign(z_row.begin(), z_row.end());
  head_ = (head_ + 1) % entries_.size();
}

PdfEstimates HistogramWindow::pdf() const {
  PdfEstimates out;
  out.m = m_;
  out.n = n_;
  out.d = static_cast<double>(k_ + 1) + eps_ * m_ * n_;
  out.p.resize(counts_.size());
  out.px.assign(m_, 0.0);
  out.py.assign(n_, 0.0);
  const double inv_d = 1.0 / out.d;
  for (int i = 0; i < m_; ++i) {
    for (int j = 0; j < n_; ++j) {
      const double pij = (counts_[static_cast<std::size_t>(i) * n_ + j] + eps_) * inv_d;
      out.p[static_cast<std::size_t>(i) * n_ + j] = pij;
      out.px[i] += pij;
      out.py[j] += pij;
    }
  }
  return out;
}

std::vector<std::pair<int, std::vector<double>>> HistogramWindow::entries() const {
  std::vector<std::pair<int, std::vector<double>>> out;
  out.reserve(entries_.size());
  if (completed() < k_) {
    out = entries_;
    return out;
  }
  for (std::size_t k = 0; k < entries_.size(); ++k)
    out.push_back(entries_[(head_ + k) % entries_.size()]);
  return out;
}

void HistogramWindow::dump_csv(std::ostream& os) const {
  for (int i = 0; i < m_; ++i) {
    for (int j = 0; j < n_; ++j) {
      if (j) os << ',';
      os << counts_[static_cast<std::size_t>(i) * n_ + j];
    }
    os << '\n';
  }
}

}  // namespace dersim
