#include <atomic>
#include <map>
#include <memory>
#include <mutex>
#include <unordered_map>
#include <vector>

#include "adapters.hpp"
#include "mqbench/clock.hpp"

namespace mqbench::transport::detail {
namespace {

// In-process message bus. One bus per loopback://<id>; delivery is
// synchronous inside publish(), which makes the transport lossless and
// ordered per publisher by construction.
class Bus {
 public:
  std::uint64_t add(std::string pattern, MessageSink sink) {
    std::lock_guard lock(mu_);
    const auto id = next_id_++;
    subs_[id] = {std::move(pattern), std::move(sink)};
    return id;
  }

  void remove(const std::vector<std::uint64_t>& ids) {
    std::lock_guard lock(mu_);
    for (auto id : ids) subs_.erase(id);
  }

  void publish(std::string_view topic, std::span<const std::uint8_t> payload) {
    std::vector<const MessageSink*> hit;
    std::unique_lock lock(mu_);
    for (const auto& [id, e] : subs_) {
      if (topic_matches(e.pattern, topic)) hit.push_back(&e.sink);
    }
    // Deliver while holding the bus lock: publish order is delivery order
    // even with several publishers on one bus, at fixture-level scale.
    const auto ts = wall_now_ns();
    for (const auto* sink : hit) (*sink)(topic, payload, ts);
  }

  static std::shared_ptr<Bus> lookup(const std::string& name) {
    static std::mutex mu;
    static std::unordered_map<std::string, std::shared_ptr<Bus>> buses;
    std::lock_guard lock(mu);
    auto& bus = buses[name];
    if (!bus) bus = std::make_shared<Bus>();
    return bus;
  }

 private:
  struct Entry {
    std::string pattern;
    MessageSink sink;
  };
  std::mutex mu_;
  std::map<std::uint64_t, Entry> subs_;
  std::uint64_t next_id_ = 1;
};

class LoopbackSession final : public Session {
 public:
  LoopbackSession(std::shared_ptr<Bus> bus, TransportOptions options)
      : bus_(std::move(bus)), options_(std::move(options)) {
    log(ConnectionEventKind::connect);
  }

  ~LoopbackSession() override { disconnect(); }

  Result<void> publish(std::string_view topic,
                       std::span<const std::uint8_t> payload,
                       QosLevel qos) override {
    if (!connected_) return make_error(errc::not_connected, "session closed");
    if (qos != QosLevel::at_most_once) {
      return make_error(errc::unsupported_qos, "loopback supports qos 0 only");
    }
    bus_->publish(topic, payload);
    return {};
  }

  Result<Subscription> subscribe(std::string_view topic, QosLevel qos,
                                 MessageSink sink) override {
    if (!connected_) return make_error(errc::not_connected, "session closed");
    if (qos != QosLevel::at_most_once) {
      return make_error(errc::unsupported_qos, "loopback supports qos 0 only");
    }
    const auto id = bus_->add(std::string(topic), sink);
    subs_.push_back({id, std::string(topic), std::move(sink)});
    return Subscription{id, std::string(topic)};
  }

  void disconnect() override {
    if (!connected_.exchange(false)) return;
    std::vector<std::uint64_t> ids;
    for (const auto& s : subs_) ids.push_back(s.id);
    bus_->remove(ids);
    log(ConnectionEventKind::disconnect);
  }

  Result<void> reconnect() override {
    if (connected_) return {};
    for (auto& s : subs_) s.id = bus_->add(s.pattern, s.sink);
    connected_ = true;
    log(ConnectionEventKind::reconnect);
    return {};
  }

  bool connected() const override { return connected_; }
  TransportKind kind() const override { return TransportKind::loopback; }
  const std::string& client_id() const override { return options_.client_id; }

 private:
  void log(ConnectionEventKind kind) {
    if (options_.events) {
      options_.events->record(options_.client_id, kind, wall_now_ns());
    }
  }

  struct SubRecord {
    std::uint64_t id;
    std::string pattern;
    MessageSink sink;
  };

  std::shared_ptr<Bus> bus_;
  TransportOptions options_;
  std::atomic<bool> connected_{true};
  std::vector<SubRecord> subs_;
};

}  // namespace

SessionPtr make_loopback_session(const net::Uri& uri,
                                 TransportOptions options) {
  return std::make_unique<LoopbackSession>(Bus::lookup(uri.host),
                                           std::move(options));
}

}  // namespace mqbench::transport::detail
