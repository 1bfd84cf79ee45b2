#include "mqbench/load/publisher.hpp"

#include <algorithm>
#include <chrono>

#include <boost/asio/post.hpp>

#include "mqbench/clock.hpp"
#include "mqbench/core/header.hpp"

namespace mqbench::load {

namespace {

std::chrono::steady_clock::time_point to_time_point(std::uint64_t mono_ns) {
  return std::chrono::steady_clock::time_point(
      std::chrono::duration_cast<std::chrono::steady_clock::duration>(
          std::chrono::nanoseconds(mono_ns)));
}

}  // namespace

PublisherEngine::PublisherEngine(net::IoRuntime& io,
                                 transport::Session& session,
                                 std::string topic, PublisherConfig cfg)
    : strand_(boost::asio::make_strand(io.ctx())),
      timer_(strand_),
      session_(session),
      topic_(std::move(topic)),
      cfg_(cfg),
      done_future_(done_.get_future()) {}

void PublisherEngine::start() {
  boost::asio::post(strand_, [self = shared_from_this()] {
    if (self->started_) return;
    self->started_ = true;
    const auto now = mono_now_ns();
    self->deadline_ns_ = now + self->cfg_.duration_ns;
    const auto first = now + self->cfg_.start_offset_ns;
    self->bucket_ = make_bucket(self->cfg_.rate, self->cfg_.bucket_capacity,
                                first);
    self->arm_timer(first);
  });
}

void PublisherEngine::request_stop() {
  boost::asio::post(strand_, [self = shared_from_this()] {
    if (self->stopping_) return;
    self->stopping_ = true;
    self->timer_.cancel();
    if (!self->started_) {
      self->started_ = true;  // never ticked; close out empty
      self->begin_finish();
    }
  });
}

PublisherStats PublisherEngine::wait() { return done_future_.get(); }

void PublisherEngine::arm_timer(std::uint64_t at_mono_ns) {
  timer_.expires_at(to_time_point(std::min(at_mono_ns, deadline_ns_)));
  timer_.async_wait([self = shared_from_this()](const auto&) { self->tick(); });
}

void PublisherEngine::tick() {
  if (draining_ || fulfilled_) return;
  if (stopping_) {
    begin_finish();
    return;
  }
  auto now = mono_now_ns();
  if (now >= deadline_ns_) {
    begin_finish();
    return;
  }
  // Drain whatever the bucket owes us (at most capacity after a stall),
  // then sleep until the next token matures.
  for (;;) {
    const auto a = bucket_try_acquire(bucket_, now);
    if (!a.granted) {
      arm_timer(a.next_eligible_ns);
      return;
    }
    emit();
    now = mono_now_ns();
    if (stopping_ || now >= deadline_ns_) {
      begin_finish();
      return;
    }
  }
}

void PublisherEngine::emit() {
  MessageHeader h;
  h.seq = seq_++;
  h.send_ts_ns = wall_now_ns();
  ++stats_.attempted_count;

  auto built = build_payload(h, cfg_.payload_bytes);
  if (!built.ok()) {
    ++stats_.publish_errors;
    last_completion_failed_ = true;
    return;
  }
  const auto send_ts = h.send_ts_ns;
  ++outstanding_;
  session_.publish_async(
      topic_, built.value(), cfg_.qos,
      [self = shared_from_this(), send_ts](Result<void> r) {
        // Completion may land on a transport strand; account on ours.
        boost::asio::post(self->strand_, [self, send_ts, ok = r.ok()] {
          --self->outstanding_;
          if (ok) {
            ++self->stats_.published_count;
            if (self->stats_.first_send_ns == 0 ||
                send_ts < self->stats_.first_send_ns) {
              self->stats_.first_send_ns = send_ts;
            }
            self->stats_.last_send_ns =
                std::max(self->stats_.last_send_ns, send_ts);
            self->last_completion_failed_ = false;
          } else {
            ++self->stats_.publish_errors;
            self->last_completion_failed_ = true;
          }
          if (self->draining_ && self->outstanding_ == 0) {
            self->timer_.cancel();  // grace timer
            self->fulfill();
          }
        });
      });
}

void PublisherEngine::begin_finish() {
  if (draining_ || fulfilled_) return;
  draining_ = true;
  if (outstanding_ == 0) {
    fulfill();
    return;
  }
  timer_.expires_after(std::chrono::milliseconds(cfg_.completion_grace_ms));
  timer_.async_wait([self = shared_from_this()](const auto& ec) {
    if (ec) return;  // cancelled: completions drained first
    self->stats_.unresolved_count = self->outstanding_;
    self->fulfill();
  });
}

void PublisherEngine::fulfill() {
  if (fulfilled_) return;
  fulfilled_ = true;
  stats_.aborted_by_transport =
      !session_.connected() && last_completion_failed_;
  done_.set_value(stats_);
}

PublisherStats run_publisher(const ExperimentSpec& spec, net::IoRuntime& io,
                             transport::Session& session,
                             const std::string& topic, std::stop_token stop,
                             std::uint64_t start_offset_ns) {
  PublisherConfig cfg;
  cfg.rate = spec.rate_per_publisher;
  cfg.payload_bytes = spec.payload_bytes;
  cfg.qos = spec.qos;
  cfg.duration_ns = static_cast<std::uint64_t>(spec.duration_s * 1e9);
  cfg.start_offset_ns = start_offset_ns;

  auto engine =
      std::make_shared<PublisherEngine>(io, session, topic, cfg);
  engine->start();
  std::stop_callback on_stop(stop, [&engine] { engine->request_stop(); });
  return engine->wait();
}

}  // namespace mqbench::load
