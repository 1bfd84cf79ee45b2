#include "mqbench/metrics/accounting.hpp"

#include <unordered_map>
#include <unordered_set>

namespace mqbench::metrics {

double compute_throughput(std::span<const LatencySample> samples,
                          const StablePeriod& period) {
  if (period.end_ns <= period.start_ns) return 0.0;
  std::uint64_t in_period = 0;
  for (const auto& s : samples) {
    if (s.recv_ts_ns >= period.start_ns && s.recv_ts_ns <= period.end_ns) {
      ++in_period;
    }
  }
  return static_cast<double>(in_period) / period.duration_s();
}

Result<LossAccounting> compute_loss(
    const std::map<std::string, std::uint64_t>& published_per_topic,
    std::span<const LatencySample> samples) {
  LossAccounting acc;
  std::unordered_map<std::string, std::unordered_set<std::uint64_t>> seen;
  for (const auto& s : samples) {
    auto it = published_per_topic.find(s.topic);
    if (it == published_per_topic.end()) {
      return make_error(errc::unknown_topic,
                        "no publish count for topic " + s.topic);
    }
    if (!seen[s.topic].insert(s.seq).second) ++acc.duplicate_count;
  }
  for (const auto& [topic, count] : published_per_topic) {
    acc.published_total += count;
    auto it = seen.find(topic);
    if (it != seen.end()) acc.unique_received += it->second.size();
  }
  if (acc.published_total > 0) {
    acc.loss_fraction =
        static_cast<double>(acc.published_total - acc.unique_received) /
        static_cast<double>(acc.published_total);
    if (acc.loss_fraction < 0) acc.loss_fraction = 0.0;
  }
  return acc;
}

}  // namespace mqbench::metrics
