#include "mqbench/load/token_bucket.hpp"

#include <algorithm>
#include <cmath>

namespace mqbench::load {

namespace {

// Grant threshold sits a nano-token under 1.0: a caller waking exactly at
// next_eligible_ns must not be refused over a rounding ulp.
constexpr double kGrantSlack = 1e-9;

}  // namespace

TokenBucket make_bucket(double rate, double capacity, std::uint64_t now_ns) {
  TokenBucket b;
  b.rate = rate;
  b.capacity = std::max(capacity, 1.0);
  b.tokens = b.capacity;
  b.last_refill_ns = now_ns;
  return b;
}

Acquire bucket_try_acquire(TokenBucket& bucket, std::uint64_t now_ns) {
  if (!(bucket.rate > 0.0)) {
    return {false, now_ns + 3'600'000'000'000ull};  // idle for an hour
  }
  if (now_ns > bucket.last_refill_ns) {
    const double elapsed_s =
        static_cast<double>(now_ns - bucket.last_refill_ns) * 1e-9;
    bucket.tokens =
        std::min(bucket.capacity, bucket.tokens + bucket.rate * elapsed_s);
  }
  bucket.last_refill_ns = std::max(bucket.last_refill_ns, now_ns);

  if (bucket.tokens >= 1.0 - kGrantSlack) {
    bucket.tokens = std::max(0.0, bucket.tokens - 1.0);
    const std::uint64_t next =
        bucket.tokens >= 1.0
            ? now_ns
            : now_ns + static_cast<std::uint64_t>(
                           std::ceil((1.0 - bucket.tokens) * 1e9 / bucket.rate));
    return {true, next};
  }
  const auto wait_ns = static_cast<std::uint64_t>(
      std::ceil((1.0 - bucket.tokens) * 1e9 / bucket.rate));
  return {false, now_ns + wait_ns};
}

}  // namespace mqbench::load
