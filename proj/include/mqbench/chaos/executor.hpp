#pragma once

#include <cstdint>
#include <functional>
#include <stop_token>
#include <string>
#include <vector>

#include "mqbench/chaos/schedule.hpp"

namespace mqbench::chaos {

/// What actually happened to one scheduled outage.
struct ExecutedEvent {
  std::size_t index = 0;
  double scheduled_fail_s = 0.0;
  double scheduled_recover_s = 0.0;
  std::uint64_t actual_fail_ns = 0;     // clock time of the apply, 0 if none
  std::uint64_t actual_recover_ns = 0;  // clock time of the restore, 0 if none
  std::string status;  // ok | apply_failed | restore_failed | skipped

  bool operator==(const ExecutedEvent&) const = default;
};

/// Clock the executor schedules against. The default wraps the wall
/// clock; tests inject a simulated one to pin exact behavior.
struct RunClock {
  std::function<std::uint64_t()> now_ns;
  std::function<void(std::uint64_t target_ns)> sleep_until;

  static RunClock real();
};

/// Drives the schedule against the proxy admin, sequentially: at each
/// fail offset the proxy is disabled, at the recover offset re-enabled,
/// then the reconnect hook runs (it re-establishes subscriber sessions
/// under their original client ids). Offsets are anchored at the call
/// instant. Admin errors are logged per event and never stop the
/// schedule; events whose time has already passed run immediately, late
/// rather than skipped. The stop token abandons the remainder.
std::vector<ExecutedEvent> run_fault_schedule(
    const std::vector<FailureEvent>& schedule, const std::string& admin,
    const std::string& proxy_name,
    const std::function<void()>& reconnect_hook, std::stop_token stop = {},
    RunClock clock = RunClock::real());

}  // namespace mqbench::chaos
