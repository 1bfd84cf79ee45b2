#include "mqbench/metrics/summarize.hpp"

#include <algorithm>

#include "mqbench/metrics/accounting.hpp"
#include "mqbench/metrics/percentiles.hpp"

namespace mqbench::metrics {

std::uint32_t target_clients_for(const ExperimentSpec& spec) {
  if (spec.is_fanout()) return 1 + spec.fanout_subscribers;
  return 2 * spec.pairs;
}

SummaryReport summarize(const RunData& run) {
  SummaryReport report;
  report.spec = run.spec;
  report.malformed_count = run.malformed_count;
  report.received_count = run.samples.size();

  const std::uint32_t target =
      run.target_clients > 0 ? run.target_clients : target_clients_for(run.spec);

  StablePeriod period;
  period.start_ns = run.run_start_ns;
  period.end_ns = run.run_end_ns;
  auto detected = detect_stable_period(run.events, target, run.run_start_ns,
                                       run.run_end_ns, run.plateau_window_s);
  if (detected.ok()) {
    period = detected.take();
    if (!period.warning.empty()) report.warnings.push_back(period.warning);
  } else {
    report.degenerate = true;
    report.warnings.push_back(std::string("stable period unavailable: ") +
                              detected.error().message);
  }
  report.stable_start_ns = period.start_ns;
  report.stable_end_ns = period.end_ns;

  report.throughput_msg_s = compute_throughput(run.samples, period);

  auto loss = compute_loss(run.published_per_topic, run.samples);
  if (loss.ok()) {
    report.loss_fraction = loss.value().loss_fraction;
    report.duplicate_count = loss.value().duplicate_count;
    report.published_count = loss.value().published_total;
  } else {
    report.degenerate = true;
    report.warnings.push_back(std::string("loss accounting failed: ") +
                              loss.error().message);
  }

  // Latency window: stable period intersected with post-warmup time. The
  // start bound applies to send timestamps so that messages generated during
  // ramp-up cannot leak their latencies into the window on late arrival.
  const auto warmup_end =
      run.run_start_ns + static_cast<std::uint64_t>(run.spec.warmup_s * 1e9);
  const auto lat_start = std::max(period.start_ns, warmup_end);
  std::vector<std::int64_t> latencies;
  latencies.reserve(run.samples.size());
  for (const auto& s : run.samples) {
    if (s.send_ts_ns < lat_start || s.recv_ts_ns > period.end_ns) continue;
    if (s.latency_ns < 0) {
      ++report.negative_latency_count;
      continue;
    }
    latencies.push_back(s.latency_ns);
  }
  if (report.negative_latency_count > 0) {
    report.warnings.push_back(
        std::to_string(report.negative_latency_count) +
        " negative-latency samples excluded (clock skew)");
  }
  auto stats = latency_stats(latencies);
  if (stats.ok()) {
    report.latency = stats.value();
  } else {
    report.degenerate = true;
    report.warnings.push_back("no latency samples in the stable window");
  }

  auto res = resmon::summarize_series(run.resources);
  report.cpu_cores = res.cpu_cores;
  report.mem_mb = res.mem_mb;
  if (res.restart_count > 0) {
    report.warnings.push_back(std::to_string(res.restart_count) +
                              " container restart(s) observed in CPU series");
  }
  if (res.gap_count > 0) {
    report.warnings.push_back(std::to_string(res.gap_count) +
                              " resource poll gap(s)");
  }
  return report;
}

}  // namespace mqbench::metrics
