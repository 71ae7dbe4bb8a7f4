#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "dersim/core_model.hpp"

namespace dersim {

// Parses a two-column CSV (timestamp seconds, power kW; one optional header
// line) into a 1 s trace. Rows are sorted by timestamp, duplicate seconds
// keep the latest row, and gaps are filled by previous-value hold. Throws
// with "<path>:<line>" on unparseable rows and on files without data.
LoadTrace parse_trace_csv(const std::string& path);

// `timestamp,power_kw` rows, one per sample; round-trips with the parser.
void write_trace_csv(const LoadTrace& trace, std::ostream& os);

// The parsed files, then replicas rotated by a seeded whole-day offset until
// `n` traces exist (sub-day traces rotate by a raw seeded offset instead).
// Replica k of base `id` is named `id-dk`.
std::vector<LoadTrace> ingest_traces(const std::vector<std::string>& paths, int n,
                                     std::uint64_t seed);

// Deterministic synthetic household loads for file-free scenarios: a base
// level, slow drift, a fridge duty cycle, seeded appliance events, and meter
// jitter, clamped at 0. Structural switching lands on the 5 s metering grid
// (loads are not observable faster than the meter samples them); only the
// jitter varies per second. One seeded stream, so trace k is reproducible
// only as part of the same (n, length, seed) call.
std::vector<LoadTrace> synthesize_traces(int n, int length_s, std::uint64_t seed);

}  // namespace dersim
