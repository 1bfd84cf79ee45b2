#include "mqbench/metrics/stable_period.hpp"

#include <algorithm>

namespace mqbench::metrics {

const char* to_string(StableDetectionMode m) {
  switch (m) {
    case StableDetectionMode::all_connected: return "all_connected";
    case StableDetectionMode::saturation_plateau: return "saturation_plateau";
  }
  return "unknown";
}

Result<StablePeriod> detect_stable_period(std::span<const ConnectionEvent> events,
                                          std::uint32_t target,
                                          std::uint64_t run_start_ns,
                                          std::uint64_t run_end_ns,
                                          double plateau_window_s) {
  if (events.empty()) {
    return make_error(errc::no_events, "no connection events recorded");
  }
  if (target < 1) {
    return make_error(errc::bad_config, "target client count must be >= 1");
  }
  const auto window_ns =
      static_cast<std::uint64_t>(plateau_window_s * 1e9);

  // Running connected count; a reconnect counts as a connect.
  std::int64_t connected = 0;
  std::uint64_t all_connected_at = 0;
  bool reached_target = false;
  std::vector<std::uint64_t> connect_times;
  for (const auto& e : events) {
    if (e.kind == ConnectionEventKind::disconnect) {
      --connected;
    } else {
      ++connected;
      connect_times.push_back(e.ts_ns);
      if (!reached_target && connected >= static_cast<std::int64_t>(target)) {
        reached_target = true;
        all_connected_at = e.ts_ns;
      }
    }
  }

  auto connected_at = [&](std::uint64_t t) {
    std::int64_t c = 0;
    for (const auto& e : events) {
      if (e.ts_ns > t) break;
      c += e.kind == ConnectionEventKind::disconnect ? -1 : 1;
    }
    return static_cast<std::uint32_t>(std::max<std::int64_t>(c, 0));
  };

  StablePeriod period;
  period.end_ns = run_end_ns;
  if (reached_target) {
    period.start_ns = std::min(all_connected_at, run_end_ns);
    period.detection_mode = StableDetectionMode::all_connected;
    period.connected_at_start = target;
    return period;
  }

  // Latest connect followed by a full quiet window inside the run.
  for (auto it = connect_times.rbegin(); it != connect_times.rend(); ++it) {
    const std::uint64_t t = *it;
    if (t + window_ns > run_end_ns) continue;
    const auto next = std::upper_bound(connect_times.begin(), connect_times.end(), t);
    if (next == connect_times.end() || *next > t + window_ns) {
      period.start_ns = t;
      period.detection_mode = StableDetectionMode::saturation_plateau;
      period.connected_at_start = connected_at(t);
      return period;
    }
  }

  // Connects kept arriving until the end: fall back to the final window.
  std::uint64_t start = run_end_ns > window_ns ? run_end_ns - window_ns : run_start_ns;
  start = std::max(start, run_start_ns);
  start = std::max(start, events.front().ts_ns);
  period.start_ns = std::min(start, run_end_ns);
  period.detection_mode = StableDetectionMode::saturation_plateau;
  period.connected_at_start = connected_at(period.start_ns);
  period.warning =
      "no connection plateau before run end; using the final " +
      std::to_string(plateau_window_s) + " s window";
  return period;
}

}  // namespace mqbench::metrics
