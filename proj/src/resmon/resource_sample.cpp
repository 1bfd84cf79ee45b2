#include "mqbench/resmon/resource_sample.hpp"

#include <algorithm>

namespace mqbench::resmon {

Result<double> cpu_cores_used(const ResourceSample& prev, const ResourceSample& curr,
                              bool* restart_flagged) {
  if (restart_flagged) *restart_flagged = false;
  if (curr.ts_ns <= prev.ts_ns) {
    return make_error(errc::non_monotonic_time,
                      "resource samples out of order");
  }
  if (curr.cpu_total_ns < prev.cpu_total_ns) {
    if (restart_flagged) *restart_flagged = true;
    return 0.0;
  }
  return static_cast<double>(curr.cpu_total_ns - prev.cpu_total_ns) /
         static_cast<double>(curr.ts_ns - prev.ts_ns);
}

ResourceSeriesStats summarize_series(std::span<const ResourceSample> series) {
  ResourceSeriesStats stats;
  const ResourceSample* prev = nullptr;
  double cpu_sum = 0.0;
  std::uint64_t cpu_n = 0;
  double mem_sum = 0.0;
  std::uint64_t mem_n = 0;
  for (const auto& s : series) {
    if (s.gap) {
      ++stats.gap_count;
      prev = nullptr;  // do not compute deltas across a gap
      continue;
    }
    const double mb = static_cast<double>(s.mem_rss_bytes) / (1024.0 * 1024.0);
    mem_sum += mb;
    ++mem_n;
    stats.mem_mb.max = std::max(stats.mem_mb.max, mb);
    if (prev) {
      bool restarted = false;
      auto cores = cpu_cores_used(*prev, s, &restarted);
      if (cores.ok()) {
        if (restarted) ++stats.restart_count;
        cpu_sum += cores.value();
        ++cpu_n;
        stats.cpu_cores.max = std::max(stats.cpu_cores.max, cores.value());
      }
    }
    prev = &s;
  }
  if (mem_n > 0) stats.mem_mb.mean = mem_sum / static_cast<double>(mem_n);
  if (cpu_n > 0) stats.cpu_cores.mean = cpu_sum / static_cast<double>(cpu_n);
  return stats;
}

}  // namespace mqbench::resmon
