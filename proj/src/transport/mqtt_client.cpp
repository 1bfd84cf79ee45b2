#include <boost/asio/steady_timer.hpp>

#include <atomic>
#include <chrono>
#include <future>
#include <map>
#include <mutex>
#include <set>

#include "../net/tcp_conn.hpp"
#include "adapters.hpp"
#include "mqbench/clock.hpp"
#include "mqbench/transport/mqtt_codec.hpp"

namespace mqbench::transport::detail {
namespace {

using namespace std::chrono_literals;

constexpr std::uint16_t kKeepaliveS = 30;

// Outstanding qos >= 1 publish. Settled exactly once, by whichever of the
// ack path, the timeout sweeper, the link-down handler, or a blocking
// waiter's own deadline gets there first.
struct AckWait {
  std::atomic<bool> settled{false};
  enum Phase { want_puback, want_pubrec, want_pubcomp } phase = want_puback;
  std::uint64_t deadline_ns = 0;
  std::function<void(Result<void>)> done;

  bool settle(Result<void> r) {
    bool expected = false;
    if (!settled.compare_exchange_strong(expected, true)) return false;
    if (done) done(std::move(r));
    return true;
  }
};

struct SubEntry {
  std::string topic;
  std::uint8_t qos = 0;
  MessageSink sink;
};

// Protocol machine for one MQTT client. Network events run on the
// connection strand; blocking facades synchronize through promises.
class MqttMachine : public std::enable_shared_from_this<MqttMachine> {
 public:
  MqttMachine(net::IoRuntime& io, net::Uri uri, TransportOptions options)
      : io_(io), uri_(std::move(uri)), options_(std::move(options)) {}

  Result<void> dial(bool is_reconnect) {
    auto conn = std::make_shared<net::TcpConn>(io_.ctx());
    const auto port = uri_.port ? uri_.port : 1883;
    if (auto r = conn->connect(uri_.host, port, options_.connect_timeout_ms);
        !r.ok()) {
      return r;
    }

    auto connack = std::make_shared<std::promise<Result<mqtt::ConnackFields>>>();
    {
      std::lock_guard lock(mu_);
      conn_ = conn;
      connack_ = connack;
    }
    // The splitter is per-link: a dying link's final read must not share
    // parser state with its replacement.
    auto splitter = std::make_shared<mqtt::FrameSplitter>();
    conn->start(
        [self = shared_from_this(), conn, splitter](const std::uint8_t* d,
                                                    std::size_t n) {
          self->on_data(conn, *splitter, d, n);
        },
        [self = shared_from_this(), conn](const boost::system::error_code&) {
          self->on_link_down(conn);
        });

    mqtt::ConnectFields f;
    f.client_id = options_.client_id;
    f.clean_session = options_.clean_session;
    f.keepalive_s = kKeepaliveS;
    if (options_.credentials) {
      f.username = options_.credentials->username;
      f.password = options_.credentials->password;
    }
    conn->send(mqtt::encode_connect(f));

    auto fut = connack->get_future();
    if (fut.wait_for(std::chrono::milliseconds(options_.connect_timeout_ms)) !=
        std::future_status::ready) {
      conn->close();
      return make_error(errc::connect_failed, "CONNACK timed out");
    }
    auto ack = fut.get();
    if (!ack.ok()) return ack.error();
    if (ack.value().return_code != 0) {
      conn->close();
      return make_error(errc::connect_failed,
                        "broker refused CONNECT, return code " +
                            std::to_string(ack.value().return_code));
    }

    connected_.store(true);
    link_event_due_.store(true);

    // A fresh broker-side session drops our subscription state; reinstall.
    if (is_reconnect && !ack.value().session_present) {
      std::vector<SubEntry> subs;
      {
        std::lock_guard lock(mu_);
        subs = subs_;
      }
      for (const auto& s : subs) {
        if (auto r = send_subscribe(s.topic, s.qos); !r.ok()) return r;
      }
    }

    schedule_tick(conn);
    record(is_reconnect ? ConnectionEventKind::reconnect
                        : ConnectionEventKind::connect);
    return {};
  }

  Result<void> publish_blocking(std::string_view topic,
                                std::span<const std::uint8_t> payload,
                                QosLevel qos) {
    if (qos == QosLevel::at_most_once) {
      return publish_qos0(topic, payload);
    }
    auto done = std::make_shared<std::promise<Result<void>>>();
    auto fut = done->get_future();
    auto wait = start_publish(topic, payload, qos,
                              [done](Result<void> r) { done->set_value(std::move(r)); });
    if (!wait.ok()) return wait.error();
    if (fut.wait_for(std::chrono::milliseconds(options_.connect_timeout_ms)) !=
        std::future_status::ready) {
      if (wait.value()->settle(make_error(errc::publish_timeout,
                                          "no ack within deadline"))) {
        forget(wait.value());
      }
    }
    return fut.get();
  }

  void publish_async(std::string_view topic,
                     std::span<const std::uint8_t> payload, QosLevel qos,
                     std::function<void(Result<void>)> done) {
    if (qos == QosLevel::at_most_once) {
      done(publish_qos0(topic, payload));
      return;
    }
    if (auto r = start_publish(topic, payload, qos, std::move(done)); !r.ok()) {
      // start_publish already invoked done with the error.
    }
  }

  Result<Subscription> subscribe(std::string_view topic, QosLevel qos,
                                 MessageSink sink) {
    if (!connected_.load()) {
      return make_error(errc::not_connected, "session closed");
    }
    {
      std::lock_guard lock(mu_);
      subs_.push_back({std::string(topic), static_cast<std::uint8_t>(qos),
                       std::move(sink)});
    }
    if (auto r = send_subscribe(std::string(topic),
                                static_cast<std::uint8_t>(qos));
        !r.ok()) {
      std::lock_guard lock(mu_);
      subs_.pop_back();
      return r.error();
    }
    return Subscription{next_sub_id_++, std::string(topic)};
  }

  void disconnect() {
    if (!connected_.exchange(false)) return;
    std::shared_ptr<net::TcpConn> conn;
    {
      std::lock_guard lock(mu_);
      conn = conn_;
    }
    if (conn && conn->open()) {
      conn->send(mqtt::encode_simple(mqtt::PacketType::disconnect));
      conn->close();  // on_link_down emits the disconnect event
    }
  }

  Result<void> reconnect() {
    if (connected_.load()) return {};
    return dial(true);
  }

  bool connected() const { return connected_.load(); }
  const std::string& client_id() const { return options_.client_id; }

 private:
  Result<void> publish_qos0(std::string_view topic,
                            std::span<const std::uint8_t> payload) {
    std::shared_ptr<net::TcpConn> conn;
    {
      std::lock_guard lock(mu_);
      conn = conn_;
    }
    if (!connected_.load() || !conn || !conn->open()) {
      return make_error(errc::not_connected, "session closed");
    }
    mqtt::PublishFields f;
    f.topic = std::string(topic);
    f.qos = 0;
    f.payload.assign(payload.begin(), payload.end());
    conn->send(mqtt::encode_publish(f));
    return {};
  }

  // Registers the wait and sends the PUBLISH. On failure the completion is
  // invoked before returning.
  Result<std::shared_ptr<AckWait>> start_publish(
      std::string_view topic, std::span<const std::uint8_t> payload,
      QosLevel qos, std::function<void(Result<void>)> done) {
    std::shared_ptr<net::TcpConn> conn;
    std::uint16_t pid = 0;
    auto wait = std::make_shared<AckWait>();
    wait->phase = qos == QosLevel::exactly_once ? AckWait::want_pubrec
                                                : AckWait::want_puback;
    wait->deadline_ns =
        mono_now_ns() + std::uint64_t(options_.connect_timeout_ms) * 1'000'000;
    wait->done = std::move(done);
    {
      std::lock_guard lock(mu_);
      conn = conn_;
      if (!connected_.load() || !conn || !conn->open()) {
        lock_free_fail(wait, errc::not_connected, "session closed");
        return make_error(errc::not_connected, "session closed");
      }
      pid = alloc_pid_locked();
      pending_[pid] = wait;
    }

    mqtt::PublishFields f;
    f.topic = std::string(topic);
    f.packet_id = pid;
    f.qos = static_cast<std::uint8_t>(qos);
    f.payload.assign(payload.begin(), payload.end());
    conn->send(mqtt::encode_publish(f));
    return wait;
  }

  static void lock_free_fail(const std::shared_ptr<AckWait>& wait, errc code,
                             const char* msg) {
    wait->settle(make_error(code, msg));
  }

  Result<void> send_subscribe(const std::string& topic, std::uint8_t qos) {
    std::shared_ptr<net::TcpConn> conn;
    std::uint16_t pid = 0;
    auto ack = std::make_shared<std::promise<Result<void>>>();
    {
      std::lock_guard lock(mu_);
      conn = conn_;
      if (!conn || !conn->open()) {
        return make_error(errc::not_connected, "session closed");
      }
      pid = alloc_pid_locked();
      suback_[pid] = ack;
    }
    mqtt::SubscribeFields f;
    f.packet_id = pid;
    f.topics.emplace_back(topic, qos);
    conn->send(mqtt::encode_subscribe(f));

    auto fut = ack->get_future();
    if (fut.wait_for(std::chrono::milliseconds(options_.connect_timeout_ms)) !=
        std::future_status::ready) {
      std::lock_guard lock(mu_);
      suback_.erase(pid);
      return make_error(errc::connect_failed, "SUBACK timed out");
    }
    return fut.get();
  }

  std::uint16_t alloc_pid_locked() {
    do {
      next_pid_ = next_pid_ == 0xFFFF ? 1 : next_pid_ + 1;
    } while (pending_.count(next_pid_) || suback_.count(next_pid_));
    return next_pid_;
  }

  void on_data(const std::shared_ptr<net::TcpConn>& conn,
               mqtt::FrameSplitter& splitter, const std::uint8_t* data,
               std::size_t n) {
    const auto recv_ts = wall_now_ns();
    splitter.feed(data, n);
    while (auto p = splitter.next()) handle_packet(conn, *p, recv_ts);
    if (splitter.corrupt()) conn->close();
  }

  void handle_packet(const std::shared_ptr<net::TcpConn>& conn,
                     const mqtt::Packet& p, std::uint64_t recv_ts) {
    using mqtt::PacketType;
    switch (p.type) {
      case PacketType::connack: {
        std::shared_ptr<std::promise<Result<mqtt::ConnackFields>>> ack;
        {
          std::lock_guard lock(mu_);
          ack.swap(connack_);
        }
        if (ack) ack->set_value(mqtt::decode_connack(p));
        break;
      }
      case PacketType::suback: {
        auto pid = mqtt::decode_packet_id(p);
        if (!pid.ok()) break;
        std::shared_ptr<std::promise<Result<void>>> ack;
        {
          std::lock_guard lock(mu_);
          if (auto it = suback_.find(pid.value()); it != suback_.end()) {
            ack = it->second;
            suback_.erase(it);
          }
        }
        if (ack) ack->set_value(Result<void>{});
        break;
      }
      case PacketType::puback:
        finish_ack(p, AckWait::want_puback);
        break;
      case PacketType::pubrec: {
        auto pid = mqtt::decode_packet_id(p);
        if (!pid.ok()) break;
        std::lock_guard lock(mu_);
        if (auto it = pending_.find(pid.value()); it != pending_.end() &&
            it->second->phase == AckWait::want_pubrec) {
          it->second->phase = AckWait::want_pubcomp;
          conn->send(mqtt::encode_ack(PacketType::pubrel, pid.value()));
        }
        break;
      }
      case PacketType::pubcomp:
        finish_ack(p, AckWait::want_pubcomp);
        break;
      case PacketType::publish:
        handle_inbound_publish(conn, p, recv_ts);
        break;
      case PacketType::pubrel: {
        auto pid = mqtt::decode_packet_id(p);
        if (pid.ok()) {
          {
            std::lock_guard lock(mu_);
            rx_qos2_.erase(pid.value());
          }
          conn->send(mqtt::encode_ack(PacketType::pubcomp, pid.value()));
        }
        break;
      }
      case PacketType::pingresp:
      default:
        break;
    }
  }

  void finish_ack(const mqtt::Packet& p, AckWait::Phase expected) {
    auto pid = mqtt::decode_packet_id(p);
    if (!pid.ok()) return;
    std::shared_ptr<AckWait> wait;
    {
      std::lock_guard lock(mu_);
      if (auto it = pending_.find(pid.value()); it != pending_.end() &&
          it->second->phase == expected) {
        wait = it->second;
        pending_.erase(it);
      }
    }
    if (wait) wait->settle(Result<void>{});
  }

  void handle_inbound_publish(const std::shared_ptr<net::TcpConn>& conn,
                              const mqtt::Packet& p, std::uint64_t recv_ts) {
    auto pub = mqtt::decode_publish(p);
    if (!pub.ok()) return;
    const auto& f = pub.value();

    bool deliver = true;
    if (f.qos == 1) {
      conn->send(mqtt::encode_ack(mqtt::PacketType::puback, f.packet_id));
    } else if (f.qos == 2) {
      {
        std::lock_guard lock(mu_);
        deliver = rx_qos2_.insert(f.packet_id).second;  // dedup redeliveries
      }
      conn->send(mqtt::encode_ack(mqtt::PacketType::pubrec, f.packet_id));
    }
    if (!deliver) return;

    std::vector<MessageSink> sinks;
    {
      std::lock_guard lock(mu_);
      for (const auto& s : subs_) {
        if (topic_matches(s.topic, f.topic)) sinks.push_back(s.sink);
      }
    }
    const std::span<const std::uint8_t> payload(f.payload);
    for (auto& sink : sinks) sink(f.topic, payload, recv_ts);
  }

  void on_link_down(const std::shared_ptr<net::TcpConn>& conn) {
    {
      std::lock_guard lock(mu_);
      if (conn_ != conn) return;  // a stale link from before a reconnect
    }
    connected_.store(false);

    std::shared_ptr<std::promise<Result<mqtt::ConnackFields>>> connack;
    std::map<std::uint16_t, std::shared_ptr<AckWait>> pending;
    std::map<std::uint16_t, std::shared_ptr<std::promise<Result<void>>>> subacks;
    {
      std::lock_guard lock(mu_);
      connack.swap(connack_);
      pending.swap(pending_);
      subacks.swap(suback_);
    }
    if (connack) {
      connack->set_value(make_error(errc::connect_failed, "link closed"));
    }
    for (auto& [pid, w] : pending) {
      w->settle(make_error(errc::not_connected, "link closed before ack"));
    }
    for (auto& [pid, a] : subacks) {
      a->set_value(make_error(errc::not_connected, "link closed"));
    }
    if (link_event_due_.exchange(false)) {
      record(ConnectionEventKind::disconnect);
    }
  }

  void forget(const std::shared_ptr<AckWait>& wait) {
    std::lock_guard lock(mu_);
    for (auto it = pending_.begin(); it != pending_.end(); ++it) {
      if (it->second == wait) {
        pending_.erase(it);
        return;
      }
    }
  }

  // Periodic keepalive ping plus expiry sweep for async publish waits.
  void schedule_tick(const std::shared_ptr<net::TcpConn>& conn) {
    auto timer = std::make_shared<boost::asio::steady_timer>(conn->strand());
    tick(conn, timer);
  }

  void tick(const std::shared_ptr<net::TcpConn>& conn,
            const std::shared_ptr<boost::asio::steady_timer>& timer) {
    if (!conn->open()) return;
    const auto now = mono_now_ns();

    if (now - last_ping_ns_ >= std::uint64_t(kKeepaliveS) * 500'000'000) {
      conn->send(mqtt::encode_simple(mqtt::PacketType::pingreq));
      last_ping_ns_ = now;
    }

    std::vector<std::shared_ptr<AckWait>> expired;
    {
      std::lock_guard lock(mu_);
      for (auto it = pending_.begin(); it != pending_.end();) {
        if (it->second->deadline_ns <= now) {
          expired.push_back(it->second);
          it = pending_.erase(it);
        } else {
          ++it;
        }
      }
    }
    for (auto& w : expired) {
      w->settle(make_error(errc::publish_timeout, "no ack within deadline"));
    }

    timer->expires_after(250ms);
    timer->async_wait([self = shared_from_this(), conn,
                       timer](const boost::system::error_code& ec) {
      if (!ec) self->tick(conn, timer);
    });
  }

  void record(ConnectionEventKind kind) {
    if (options_.events) {
      options_.events->record(options_.client_id, kind, wall_now_ns());
    }
  }

  net::IoRuntime& io_;
  net::Uri uri_;
  TransportOptions options_;

  std::mutex mu_;
  std::shared_ptr<net::TcpConn> conn_;
  std::shared_ptr<std::promise<Result<mqtt::ConnackFields>>> connack_;
  std::map<std::uint16_t, std::shared_ptr<AckWait>> pending_;
  std::map<std::uint16_t, std::shared_ptr<std::promise<Result<void>>>> suback_;
  std::vector<SubEntry> subs_;
  std::set<std::uint16_t> rx_qos2_;
  std::uint16_t next_pid_ = 0;
  std::uint64_t next_sub_id_ = 1;
  std::uint64_t last_ping_ns_ = 0;
  std::atomic<bool> connected_{false};
  std::atomic<bool> link_event_due_{false};
};

class MqttSession final : public Session {
 public:
  explicit MqttSession(std::shared_ptr<MqttMachine> m) : m_(std::move(m)) {}
  ~MqttSession() override { m_->disconnect(); }

  Result<void> publish(std::string_view topic,
                       std::span<const std::uint8_t> payload,
                       QosLevel qos) override {
    return m_->publish_blocking(topic, payload, qos);
  }
  void publish_async(std::string_view topic,
                     std::span<const std::uint8_t> payload, QosLevel qos,
                     std::function<void(Result<void>)> done) override {
    m_->publish_async(topic, payload, qos, std::move(done));
  }
  Result<Subscription> subscribe(std::string_view topic, QosLevel qos,
                                 MessageSink sink) override {
    return m_->subscribe(topic, qos, std::move(sink));
  }
  void disconnect() override { m_->disconnect(); }
  Result<void> reconnect() override { return m_->reconnect(); }
  bool connected() const override { return m_->connected(); }
  TransportKind kind() const override { return TransportKind::mqtt; }
  const std::string& client_id() const override { return m_->client_id(); }

 private:
  std::shared_ptr<MqttMachine> m_;
};

}  // namespace

Result<SessionPtr> make_mqtt_session(net::IoRuntime& io, const net::Uri& uri,
                                     TransportOptions options) {
  auto machine =
      std::make_shared<MqttMachine>(io, uri, std::move(options));
  if (auto r = machine->dial(false); !r.ok()) return r.error();
  return SessionPtr(new MqttSession(std::move(machine)));
}

}  // namespace mqbench::transport::detail
