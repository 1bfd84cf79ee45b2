#include "mqbench/load/subscriber.hpp"

#include <condition_variable>

#include "mqbench/core/header.hpp"

namespace mqbench::load {

transport::MessageSink SampleBuffer::sink() {
  return [self = shared_from_this()](std::string_view topic,
                                     std::span<const std::uint8_t> payload,
                                     std::uint64_t recv_ts_ns) {
    self->record(topic, payload, recv_ts_ns);
  };
}

void SampleBuffer::record(std::string_view topic,
                          std::span<const std::uint8_t> payload,
                          std::uint64_t recv_ts_ns) {
  auto header = decode_header(payload);
  std::lock_guard lock(mu_);
  if (!header.ok()) {
    ++malformed_;
    return;
  }
  LatencySample s;
  s.topic = std::string(topic);
  s.seq = header.value().seq;
  s.send_ts_ns = header.value().send_ts_ns;
  s.recv_ts_ns = recv_ts_ns;
  s.latency_ns = static_cast<std::int64_t>(recv_ts_ns) -
                 static_cast<std::int64_t>(header.value().send_ts_ns);
  s.payload_bytes = payload.size();
  samples_.push_back(std::move(s));
}

std::uint64_t SampleBuffer::received_count() const {
  std::lock_guard lock(mu_);
  return samples_.size();
}

std::uint64_t SampleBuffer::malformed_count() const {
  std::lock_guard lock(mu_);
  return malformed_;
}

std::vector<LatencySample> SampleBuffer::take() {
  std::lock_guard lock(mu_);
  return std::move(samples_);
}

std::vector<LatencySample> SampleBuffer::snapshot() const {
  std::lock_guard lock(mu_);
  return samples_;
}

Result<std::uint64_t> run_subscriber(const ExperimentSpec& spec,
                                     transport::Session& session,
                                     const std::string& topic,
                                     const std::shared_ptr<SampleBuffer>& sink,
                                     std::stop_token stop,
                                     std::function<void()> on_subscribed) {
  auto sub = session.subscribe(topic, spec.qos, sink->sink());
  if (!sub.ok()) return sub.error();
  if (on_subscribed) on_subscribed();

  if (stop.stop_possible()) {
    std::mutex mu;
    std::condition_variable cv;
    std::stop_callback wake(stop, [&] {
      std::lock_guard lock(mu);
      cv.notify_all();
    });
    std::unique_lock lock(mu);
    cv.wait(lock, [&] { return stop.stop_requested(); });
  }
  return sink->received_count();
}

}  // namespace mqbench::load
