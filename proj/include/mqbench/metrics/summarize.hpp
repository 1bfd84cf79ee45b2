#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "mqbench/core/types.hpp"
#include "mqbench/metrics/stable_period.hpp"
#include "mqbench/resmon/resource_sample.hpp"

namespace mqbench::metrics {

/// Everything one completed run hands to the aggregator.
struct RunData {
  ExperimentSpec spec;
  std::vector<LatencySample> samples;
  std::vector<ConnectionEvent> events;
  std::map<std::string, std::uint64_t> published_per_topic;
  std::vector<resmon::ResourceSample> resources;
  std::uint64_t run_start_ns = 0;  // wall clock
  std::uint64_t run_end_ns = 0;
  std::uint64_t malformed_count = 0;
  /// Expected client count for stable-period detection; 0 derives it from
  /// the spec topology (2 x pairs, or 1 + fanout_subscribers).
  std::uint32_t target_clients = 0;
  double plateau_window_s = 10.0;
};

std::uint32_t target_clients_for(const ExperimentSpec& spec);

/// Assembles the report. Latency percentiles use only samples inside the
/// stable period and past warmup; negative-latency (clock skew) samples are
/// counted but excluded. An empty sample window yields degenerate=true
/// instead of an error.
SummaryReport summarize(const RunData& run);

}  // namespace mqbench::metrics
