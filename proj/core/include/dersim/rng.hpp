#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace dersim {

// Deterministic random stream. mt19937_64 output is pinned by the standard;
// the value transforms live here because the stdlib distribution objects are
// implementation-defined and would break byte-identical reruns across
// toolchains.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  // Uniform in [0, 1) with 53-bit resolution.
  double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Inclusive integer range via rejection-free modular draw over a power-of
  // -two widened stream; bias is negligible for the small ranges used here
  // but rejection keeps draws exact anyway.
  std::uint64_t uniform_int(std::uint64_t lo, std::uint64_t hi) {
    const std::uint64_t span = hi - lo + 1;
    const std::uint64_t limit = std::uint64_t(-1) - std::uint64_t(-1) % span;
    std::uint64_t v;
    do {
      v = eng_();
    } while (v >= limit);
    return lo + v % span;
  }

  // Standard normal via Box-Muller; consumes exactly two uniforms per call so
  // the stream position stays reproducible.
  double normal() {
    double u1 = uniform();
    const double u2 = uniform();
    if (u1 <= 0.0) u1 = 0x1.0p-53;
    const double r = std::sqrt(-2.0 * std::log(u1));
    return r * std::cos(6.283185307179586476925286766559 * u2);
  }

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  std::mt19937_64& engine() { return eng_; }

 private:
  std::mt19937_64 eng_;
};

}  // namespace dersim
