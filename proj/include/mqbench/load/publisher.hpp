#pragma once

#include <cstdint>
#include <future>
#include <memory>
#include <stop_token>
#include <string>

#include <boost/asio/steady_timer.hpp>
#include <boost/asio/strand.hpp>

#include "mqbench/core/types.hpp"
#include "mqbench/load/token_bucket.hpp"
#include "mqbench/net/io_runtime.hpp"
#include "mqbench/transport/transport.hpp"

namespace mqbench::load {

struct PublisherConfig {
  double rate = 10.0;             // msg/s
  double bucket_capacity = 1.0;   // catch-up bound after stalls
  std::uint64_t payload_bytes = 1024;
  QosLevel qos = QosLevel::at_most_once;
  std::uint64_t duration_ns = 0;      // emission window, measured from start()
  std::uint64_t start_offset_ns = 0;  // stagger inside the window
  // How long to wait for outstanding publish acks once the schedule ends.
  std::uint32_t completion_grace_ms = 5000;
};

struct PublisherStats {
  std::uint64_t published_count = 0;  // completions reported ok
  std::uint64_t publish_errors = 0;   // completions reported failed
  std::uint64_t first_send_ns = 0;    // wall clock, successful sends only
  std::uint64_t last_send_ns = 0;
  std::uint64_t attempted_count = 0;  // scheduled emissions (seq high-water)
  std::uint64_t unresolved_count = 0; // acks missing when the grace ran out
  // Session was closed at harvest time and the final completion failed.
  bool aborted_by_transport = false;
};

/// Open-loop publisher: an asio timer state machine that emits one
/// header-stamped message per token, on schedule, no matter how slowly the
/// transport acknowledges. Publish failures are counted and never retried;
/// the schedule never slips to accommodate the broker.
///
/// The session must outlive the engine. All engine state lives on one
/// strand of the shared runtime; no thread is spawned.
class PublisherEngine : public std::enable_shared_from_this<PublisherEngine> {
 public:
  PublisherEngine(net::IoRuntime& io, transport::Session& session,
                  std::string topic, PublisherConfig cfg);

  void start();
  /// Ends the schedule early. Idempotent, callable from any thread.
  void request_stop();
  /// Blocks until the schedule has ended and completions are accounted.
  PublisherStats wait();

 private:
  void tick();
  void emit();
  void begin_finish();
  void fulfill();
  void arm_timer(std::uint64_t at_mono_ns);

  boost::asio::strand<boost::asio::io_context::executor_type> strand_;
  boost::asio::steady_timer timer_;
  transport::Session& session_;
  std::string topic_;
  PublisherConfig cfg_;

  // Strand-confined.
  TokenBucket bucket_;
  std::uint64_t deadline_ns_ = 0;
  std::uint64_t seq_ = 0;
  std::uint64_t outstanding_ = 0;
  bool started_ = false;
  bool stopping_ = false;
  bool draining_ = false;
  bool fulfilled_ = false;
  bool last_completion_failed_ = false;
  PublisherStats stats_;

  std::promise<PublisherStats> done_;
  std::future<PublisherStats> done_future_;
};

/// Blocking facade: runs one publisher for spec.duration_s (or until the
/// stop token fires) and returns its stats. start_offset_ns staggers the
/// first emission inside the window.
PublisherStats run_publisher(const ExperimentSpec& spec, net::IoRuntime& io,
                             transport::Session& session,
                             const std::string& topic,
                             std::stop_token stop = {},
                             std::uint64_t start_offset_ns = 0);

}  // namespace mqbench::load
