#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "mqbench/core/types.hpp"
#include "mqbench/result.hpp"

namespace mqbench::metrics {

/// Nearest-rank percentile: value at 1-based index ceil(q/100 * N) of the
/// sorted list. q=0 maps to the minimum, q=100 to the maximum.
Result<std::vector<std::int64_t>> percentiles(std::span<const std::int64_t> samples,
                                              std::span<const double> qs);

/// min/mean/stddev(population)/p50/p95/p99/max in one pass over a copy.
Result<LatencyStats> latency_stats(std::span<const std::int64_t> samples);

}  // namespace mqbench::metrics
