#pragma once

// Internal: deterministic number formatting shared by the CSV/JSON writers.
// Shortest round-trip form so emitted files are bit-stable across runs.

#include <charconv>
#include <string>

namespace dersim::detail {

inline void append_double(std::string& out, double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  out.append(buf, res.ptr);
}

inline std::string format_double(double v) {
  std::string s;
  append_double(s, v);
  return s;
}

}  // namespace dersim::detail
