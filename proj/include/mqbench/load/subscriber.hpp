#pragma once

#include <cstdint>
#include <memory>
#include <mutex>
#include <stop_token>
#include <string>
#include <vector>

#include "mqbench/core/types.hpp"
#include "mqbench/result.hpp"
#include "mqbench/transport/transport.hpp"

namespace mqbench::load {

/// Per-subscriber sample store. Deliveries land here straight off the
/// transport: header decoded, latency computed against the local wall
/// clock, anything that fails to parse counted as malformed. One buffer
/// per subscriber keeps measurement free of cross-task contention;
/// buffers are merged after the run.
class SampleBuffer : public std::enable_shared_from_this<SampleBuffer> {
 public:
  /// Delivery callback wired into Session::subscribe. Holds a shared
  /// reference, so late deliveries after the run are safe.
  transport::MessageSink sink();

  void record(std::string_view topic, std::span<const std::uint8_t> payload,
              std::uint64_t recv_ts_ns);

  std::uint64_t received_count() const;   // well-formed samples
  std::uint64_t malformed_count() const;  // foreign or truncated messages
  std::vector<LatencySample> take();
  std::vector<LatencySample> snapshot() const;

 private:
  mutable std::mutex mu_;
  std::vector<LatencySample> samples_;
  std::uint64_t malformed_ = 0;
};

/// Blocking facade: subscribes `sink` to the topic at spec.qos and parks
/// until the stop token fires (samples accumulate on transport threads
/// meanwhile). Returns the sample count at stop time. With a token that
/// can never stop, returns right after subscribing. `on_subscribed` fires
/// once the subscription is live, so a caller can hold publishers back
/// until every subscriber is listening.
Result<std::uint64_t> run_subscriber(const ExperimentSpec& spec,
                                     transport::Session& session,
                                     const std::string& topic,
                                     const std::shared_ptr<SampleBuffer>& sink,
                                     std::stop_token stop = {},
                                     std::function<void()> on_subscribed = {});

}  // namespace mqbench::load
