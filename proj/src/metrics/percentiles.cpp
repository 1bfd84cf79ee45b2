#include "mqbench/metrics/percentiles.hpp"

#include <algorithm>
#include <cmath>

namespace mqbench::metrics {

namespace {

std::int64_t nearest_rank(const std::vector<std::int64_t>& sorted, double q) {
  const auto n = sorted.size();
  auto rank = static_cast<std::size_t>(std::ceil(q / 100.0 * static_cast<double>(n)));
  if (rank < 1) rank = 1;
  if (rank > n) rank = n;
  return sorted[rank - 1];
}

}  // namespace

Result<std::vector<std::int64_t>> percentiles(std::span<const std::int64_t> samples,
                                              std::span<const double> qs) {
  if (samples.empty()) {
    return make_error(errc::empty_sample_set, "percentiles over empty sample set");
  }
  std::vector<std::int64_t> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  std::vector<std::int64_t> out;
  out.reserve(qs.size());
  for (double q : qs) out.push_back(nearest_rank(sorted, q));
  return out;
}

Result<LatencyStats> latency_stats(std::span<const std::int64_t> samples) {
  if (samples.empty()) {
    return make_error(errc::empty_sample_set, "latency stats over empty sample set");
  }
  std::vector<std::int64_t> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());

  LatencyStats st;
  st.min_ns = sorted.front();
  st.max_ns = sorted.back();
  double sum = 0.0;
  for (auto v : sorted) sum += static_cast<double>(v);
  const double n = static_cast<double>(sorted.size());
  st.mean_ns = sum / n;
  double sq = 0.0;
  for (auto v : sorted) {
    const double d = static_cast<double>(v) - st.mean_ns;
    sq += d * d;
  }
  st.stddev_ns = std::sqrt(sq / n);
  st.p50_ns = nearest_rank(sorted, 50.0);
  st.p95_ns = nearest_rank(sorted, 95.0);
  st.p99_ns = nearest_rank(sorted, 99.0);
  return st;
}

}  // namespace mqbench::metrics
