#pragma once

#include <cstdint>

namespace mqbench::load {

/// Token-bucket rate limiter driven by an externally supplied monotonic
/// clock. One token buys one message; capacity bounds how far the bucket
/// can catch up after a stall. A fresh bucket starts full so the first
/// acquire grants immediately.
struct TokenBucket {
  double rate = 1.0;      // tokens per second, must be > 0
  double capacity = 1.0;  // maximum burst tokens
  double tokens = 1.0;
  std::uint64_t last_refill_ns = 0;
};

TokenBucket make_bucket(double rate, double capacity, std::uint64_t now_ns);

struct Acquire {
  bool granted = false;
  /// Earliest monotonic time a token will exist (== now_ns when one
  /// already does). The caller sleeps until then and retries.
  std::uint64_t next_eligible_ns = 0;
};

/// Refills by rate x elapsed (capped at capacity), then grants one token
/// if available. now_ns must not run backwards; regressions are treated
/// as zero elapsed time.
Acquire bucket_try_acquire(TokenBucket& bucket, std::uint64_t now_ns);

}  // namespace mqbench::load
