#pragma once

#include <chrono>
#include <cstdint>

namespace mqbench {

/// Wall clock, nanoseconds since the UNIX epoch. Used for message
/// timestamps so publisher and subscriber share an epoch.
inline std::uint64_t wall_now_ns() {
  return static_cast<std::uint64_t>(
      std::chrono::duration_cast<std::chrono::nanoseconds>(
          std::chrono::system_clock::now().time_since_epoch())
          .count());
}

/// Monotonic clock, nanoseconds from an arbitrary origin. Used for
/// scheduling, immune to wall-clock steps.
inline std::uint64_t mono_now_ns() {
  return static_cast<std::uint64_t>(
      std::chrono::duration_cast<std::chrono::nanoseconds>(
          std::chrono::steady_clock::now().time_since_epoch())
          .count());
}

}  // namespace mqbench
