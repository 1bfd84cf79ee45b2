#pragma once

#include <string_view>

#include "mqbench/net/uri.hpp"
#include "mqbench/transport/transport.hpp"

namespace mqbench::transport::detail {

SessionPtr make_loopback_session(const net::Uri& uri, TransportOptions options);
Result<SessionPtr> make_mqtt_session(net::IoRuntime& io, const net::Uri& uri,
                                     TransportOptions options);
Result<SessionPtr> make_nats_session(net::IoRuntime& io, const net::Uri& uri,
                                     TransportOptions options);
Result<SessionPtr> make_resp_session(net::IoRuntime& io, const net::Uri& uri,
                                     TransportOptions options);
Result<SessionPtr> make_amqp_session(net::IoRuntime& io, const net::Uri& uri,
                                     TransportOptions options);
Result<SessionPtr> make_zenoh_session(net::IoRuntime& io, const net::Uri& uri,
                                      TransportOptions options);

// Keeps a callback-driven adapter alive until its I/O handlers drain: the
// adapter lives as a shared_ptr captured by its own callbacks, and the
// owner holds this forwarding handle.
class SharedSessionHandle final : public Session {
 public:
  explicit SharedSessionHandle(std::shared_ptr<Session> inner)
      : inner_(std::move(inner)) {}
  ~SharedSessionHandle() override { inner_->disconnect(); }

  Result<void> publish(std::string_view topic,
                       std::span<const std::uint8_t> payload,
                       QosLevel qos) override {
    return inner_->publish(topic, payload, qos);
  }
  void publish_async(std::string_view topic,
                     std::span<const std::uint8_t> payload, QosLevel qos,
                     std::function<void(Result<void>)> done) override {
    inner_->publish_async(topic, payload, qos, std::move(done));
  }
  Result<Subscription> subscribe(std::string_view topic, QosLevel qos,
                                 MessageSink sink) override {
    return inner_->subscribe(topic, qos, std::move(sink));
  }
  void disconnect() override { inner_->disconnect(); }
  Result<void> reconnect() override { return inner_->reconnect(); }
  bool connected() const override { return inner_->connected(); }
  TransportKind kind() const override { return inner_->kind(); }
  const std::string& client_id() const override { return inner_->client_id(); }

 private:
  std::shared_ptr<Session> inner_;
};

// MQTT-style filter match: exact topic, bare "#", or a trailing "/#"
// that also covers the parent level ("bench/#" matches "bench").
inline bool topic_matches(std::string_view pattern, std::string_view topic) {
  if (pattern == topic || pattern == "#") return true;
  if (pattern.size() >= 2 && pattern.substr(pattern.size() - 2) == "/#") {
    const auto prefix = pattern.substr(0, pattern.size() - 2);
    if (topic == prefix) return true;
    return topic.size() > prefix.size() + 1 &&
           topic.substr(0, prefix.size()) == prefix &&
           topic[prefix.size()] == '/';
  }
  return false;
}

}  // namespace mqbench::transport::detail
