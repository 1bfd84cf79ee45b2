#include "mqbench/resmon/monitor.hpp"

#include <chrono>
#include <condition_variable>
#include <mutex>

#include "mqbench/clock.hpp"
#include "mqbench/resmon/stats_client.hpp"

namespace mqbench::resmon {

std::vector<ResourceSample> monitor(const MonitorConfig& cfg,
                                    std::stop_token stop) {
  std::vector<ResourceSample> series;
  if (cfg.interval_s <= 0.0) return series;

  StatsClient client(cfg.endpoint, cfg.timeout_ms);
  const auto interval =
      std::chrono::nanoseconds(static_cast<std::uint64_t>(cfg.interval_s * 1e9));
  const auto start = std::chrono::steady_clock::now();

  std::mutex mu;
  std::condition_variable_any cv;
  for (std::uint64_t k = 0; !stop.stop_requested(); ++k) {
    const auto target = start + k * interval;
    {
      std::unique_lock lock(mu);
      cv.wait_until(lock, stop, target, [] { return false; });
    }
    if (stop.stop_requested()) break;

    auto sample = client.poll(cfg.container_id);
    if (sample.ok()) {
      series.push_back(sample.value());
    } else {
      ResourceSample gap;
      gap.ts_ns = wall_now_ns();
      gap.gap = true;
      series.push_back(gap);
    }
  }
  return series;
}

Monitor::Monitor(MonitorConfig cfg)
    : worker_([this, cfg = std::move(cfg)](std::stop_token stop) {
        series_ = monitor(cfg, stop);
      }) {}

Monitor::~Monitor() { stop(); }

std::vector<ResourceSample> Monitor::stop() {
  if (stopped_) return {};
  stopped_ = true;
  worker_.request_stop();
  worker_.join();
  return std::move(series_);
}

}  // namespace mqbench::resmon
