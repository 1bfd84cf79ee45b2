#pragma once

#include <cstdint>
#include <span>
#include <string>

#include "mqbench/core/types.hpp"
#include "mqbench/result.hpp"

namespace mqbench::resmon {

/// One point of the broker container's resource series. `gap` marks a
/// scheduled poll that failed (container gone, endpoint down).
struct ResourceSample {
  std::uint64_t ts_ns = 0;
  std::uint64_t cpu_total_ns = 0;   // cumulative CPU time
  std::uint64_t mem_rss_bytes = 0;  // resident-set approximation
  std::uint64_t mem_usage_bytes = 0;  // raw usage as reported by the engine
  bool gap = false;

  bool operator==(const ResourceSample&) const = default;
};

/// Fractional cores used between two samples. A negative CPU delta means
/// the container restarted; that is flagged as 0 cores rather than failing.
Result<double> cpu_cores_used(const ResourceSample& prev, const ResourceSample& curr,
                              bool* restart_flagged = nullptr);

struct ResourceSeriesStats {
  SeriesStats cpu_cores;
  SeriesStats mem_mb;  // MB = 2^20 bytes
  std::uint64_t gap_count = 0;
  std::uint64_t restart_count = 0;
};

/// Pairwise cores over consecutive non-gap samples plus memory stats.
ResourceSeriesStats summarize_series(std::span<const ResourceSample> series);

}  // namespace mqbench::resmon
