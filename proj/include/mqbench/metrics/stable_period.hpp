#pragma once

#include <cstdint>
#include <span>
#include <string>

#include "mqbench/core/types.hpp"
#include "mqbench/result.hpp"

namespace mqbench::metrics {

enum class StableDetectionMode { all_connected, saturation_plateau };

const char* to_string(StableDetectionMode m);

/// Post-connection-phase window over which throughput is computed.
struct StablePeriod {
  std::uint64_t start_ns = 0;
  std::uint64_t end_ns = 0;
  StableDetectionMode detection_mode = StableDetectionMode::all_connected;
  std::uint32_t connected_at_start = 0;
  std::string warning;  // set when the final-window fallback was used

  double duration_s() const {
    return static_cast<double>(end_ns - start_ns) / 1e9;
  }
};

/// Finds when the running connected count first reaches target; failing
/// that, the last connect after which no connect arrives for
/// plateau_window_s; failing that, the final plateau_window_s of the run
/// (with a warning attached).
Result<StablePeriod> detect_stable_period(std::span<const ConnectionEvent> events,
                                          std::uint32_t target,
                                          std::uint64_t run_start_ns,
                                          std::uint64_t run_end_ns,
                                          double plateau_window_s = 10.0);

}  // namespace mqbench::metrics
