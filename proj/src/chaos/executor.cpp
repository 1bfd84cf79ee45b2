#include "mqbench/chaos/executor.hpp"

#include <chrono>
#include <thread>

#include "mqbench/chaos/proxy_client.hpp"
#include "mqbench/clock.hpp"

namespace mqbench::chaos {

RunClock RunClock::real() {
  RunClock c;
  c.now_ns = [] { return wall_now_ns(); };
  c.sleep_until = [](std::uint64_t target_ns) {
    const auto now = wall_now_ns();
    if (target_ns > now) {
      std::this_thread::sleep_for(std::chrono::nanoseconds(target_ns - now));
    }
  };
  return c;
}

std::vector<ExecutedEvent> run_fault_schedule(
    const std::vector<FailureEvent>& schedule, const std::string& admin,
    const std::string& proxy_name,
    const std::function<void()>& reconnect_hook, std::stop_token stop,
    RunClock clock) {
  std::vector<ExecutedEvent> log;
  log.reserve(schedule.size());
  const std::uint64_t t0 = clock.now_ns();
  const auto at = [t0](double offset_s) {
    return t0 + static_cast<std::uint64_t>(offset_s * 1e9);
  };

  bool abandoned = false;
  for (std::size_t i = 0; i < schedule.size(); ++i) {
    ExecutedEvent ev;
    ev.index = i;
    ev.scheduled_fail_s = schedule[i].fail_at_s;
    ev.scheduled_recover_s = schedule[i].recover_at_s;

    if (abandoned || stop.stop_requested()) {
      ev.status = "skipped";
      log.push_back(std::move(ev));
      abandoned = true;
      continue;
    }

    clock.sleep_until(at(schedule[i].fail_at_s));
    if (stop.stop_requested()) {
      ev.status = "skipped";
      log.push_back(std::move(ev));
      abandoned = true;
      continue;
    }

    if (auto r = apply_failure(admin, proxy_name); !r.ok()) {
      ev.status = "apply_failed";
      log.push_back(std::move(ev));
      continue;  // path never severed; nothing to restore
    }
    ev.actual_fail_ns = clock.now_ns();

    clock.sleep_until(at(schedule[i].recover_at_s));
    // A restore is owed even when stopping: never leave the path severed.
    if (auto r = restore(admin, proxy_name); !r.ok()) {
      ev.status = "restore_failed";
      log.push_back(std::move(ev));
      continue;
    }
    ev.actual_recover_ns = clock.now_ns();
    ev.status = "ok";
    if (reconnect_hook) reconnect_hook();
    log.push_back(std::move(ev));
  }
  return log;
}

}  // namespace mqbench::chaos
