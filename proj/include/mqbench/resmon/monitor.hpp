#pragma once

#include <cstdint>
#include <stop_token>
#include <string>
#include <thread>
#include <vector>

#include "mqbench/resmon/resource_sample.hpp"

namespace mqbench::resmon {

struct MonitorConfig {
  std::string endpoint;      // e.g. "http://127.0.0.1:2375"
  std::string container_id;
  double interval_s = 1.0;
  std::uint32_t timeout_ms = 2000;
};

/// Polls the stats endpoint on a fixed absolute schedule (poll k fires at
/// start + k x interval, so slow responses cannot drift the grid) until
/// the stop token fires. Failed polls become gap markers in the series.
/// Issues exactly one remote call per interval. Blocking; run it on its
/// own thread.
std::vector<ResourceSample> monitor(const MonitorConfig& cfg,
                                    std::stop_token stop);

/// RAII wrapper: starts monitoring on a jthread, hands the series back on
/// stop().
class Monitor {
 public:
  explicit Monitor(MonitorConfig cfg);
  ~Monitor();

  /// Signals the loop and joins it; returns the collected series. Safe to
  /// call once; later calls return an empty series.
  std::vector<ResourceSample> stop();

 private:
  std::vector<ResourceSample> series_;
  std::jthread worker_;
  bool stopped_ = false;
};

}  // namespace mqbench::resmon
