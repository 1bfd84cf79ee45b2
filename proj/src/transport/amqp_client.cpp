#include <atomic>
#include <cstring>
#include <deque>
#include <future>
#include <map>
#include <mutex>

#include "../net/tcp_conn.hpp"
#include "adapters.hpp"
#include "mqbench/clock.hpp"
#include "mqbench/transport/amqp_codec.hpp"

// AMQP 0-9-1 session on top of the framing in amqp_codec: direct-exchange
// pub/sub with no-ack consumers and unconfirmed publishes.
namespace mqbench::transport::detail {
namespace {

using namespace mqbench::transport::amqp;

constexpr char kExchange[] = "mqbench.direct";

class AmqpSession final : public Session,
                          public std::enable_shared_from_this<AmqpSession> {
 public:
  AmqpSession(net::IoRuntime& io, net::Uri uri, TransportOptions options)
      : io_(io), uri_(std::move(uri)), options_(std::move(options)) {}

  Result<void> dial(bool is_reconnect) {
    auto conn = std::make_shared<net::TcpConn>(io_.ctx());
    const auto port = uri_.port ? uri_.port : 5672;
    if (auto r = conn->connect(uri_.host, port, options_.connect_timeout_ms);
        !r.ok()) {
      return r;
    }
    auto parser = std::make_shared<FrameParser>();
    {
      std::lock_guard lock(mu_);
      conn_ = conn;
      mailbox_.clear();  // stale replies from a previous link
    }
    conn->start(
        [self = shared_from_this(), conn, parser](const std::uint8_t* d,
                                                  std::size_t n) {
          self->on_data(conn, *parser, d, n);
        },
        [self = shared_from_this(), conn](const boost::system::error_code&) {
          self->on_link_down(conn);
        });

    conn->send({'A', 'M', 'Q', 'P', 0, 0, 9, 1});

    // connection.start -> start-ok
    if (auto r = expect(kClassConnection, 10); !r.ok()) return r.error();
    {
      Writer args;
      args.empty_table();  // client-properties
      args.shortstr("PLAIN");
      const std::string user =
          options_.credentials ? options_.credentials->username : "guest";
      const std::string pass =
          options_.credentials ? options_.credentials->password : "guest";
      std::string response;
      response.push_back('\0');
      response += user;
      response.push_back('\0');
      response += pass;
      args.longstr(response);
      args.shortstr("en_US");
      conn->send(method_frame(0, kClassConnection, 11, std::move(args)));
    }

    // connection.tune -> tune-ok, connection.open -> open-ok
    auto tune = expect(kClassConnection, 30);
    if (!tune.ok()) return tune.error();
    {
      Reader r(tune.value());
      std::uint16_t channel_max = 0, heartbeat = 0;
      std::uint32_t frame_max = 0;
      if (r.u16(channel_max) && r.u32(frame_max) && r.u16(heartbeat)) {
        if (frame_max >= 4096) frame_max_ = frame_max;
      }
      Writer args;
      args.u16(1);          // channel-max: one channel per session
      args.u32(frame_max_);
      args.u16(0);          // heartbeat off
      conn->send(method_frame(0, kClassConnection, 31, std::move(args)));

      Writer open;
      open.shortstr(uri_.path.empty() ? "/" : uri_.path);
      open.shortstr("");
      open.u8(0);
      conn->send(method_frame(0, kClassConnection, 40, std::move(open)));
    }
    if (auto r = expect(kClassConnection, 41); !r.ok()) return r.error();

    // channel.open -> open-ok, exchange.declare -> declare-ok
    {
      Writer args;
      args.shortstr("");
      conn->send(method_frame(1, kClassChannel, 10, std::move(args)));
    }
    if (auto r = expect(kClassChannel, 11); !r.ok()) return r.error();
    {
      Writer args;
      args.u16(0);
      args.shortstr(kExchange);
      args.shortstr("direct");
      args.u8(0);  // passive/durable/auto-delete/internal/no-wait bits
      args.empty_table();
      conn->send(method_frame(1, kClassExchange, 10, std::move(args)));
    }
    if (auto r = expect(kClassExchange, 11); !r.ok()) return r.error();

    connected_.store(true);
    link_event_due_.store(true);

    if (is_reconnect) {
      std::vector<SubEntry> subs;
      {
        std::lock_guard lock(mu_);
        subs = subs_;
      }
      for (const auto& s : subs) {
        if (auto r = establish_consumer(conn, s.topic); !r.ok()) return r;
      }
    }
    record(is_reconnect ? ConnectionEventKind::reconnect
                        : ConnectionEventKind::connect);
    return {};
  }

  Result<void> publish(std::string_view topic,
                       std::span<const std::uint8_t> payload,
                       QosLevel qos) override {
    if (qos != QosLevel::at_most_once) {
      return make_error(errc::unsupported_qos,
                        "amqp publishes without confirms; qos 0 only");
    }
    std::shared_ptr<net::TcpConn> conn;
    {
      std::lock_guard lock(mu_);
      conn = conn_;
    }
    if (!connected_.load() || !conn || !conn->open()) {
      return make_error(errc::not_connected, "session closed");
    }

    Writer args;
    args.u16(0);
    args.shortstr(kExchange);
    args.shortstr(topic);
    args.u8(0);  // mandatory/immediate off
    auto bytes = method_frame(1, kClassBasic, 40, std::move(args));

    Writer header;
    header.u16(kClassBasic);
    header.u16(0);  // weight
    header.u64(payload.size());
    header.u16(0);  // no properties
    const auto header_frame = encode_frame(2, 1, header.take());
    bytes.insert(bytes.end(), header_frame.begin(), header_frame.end());

    const std::size_t chunk = frame_max_ - 8;
    for (std::size_t off = 0; off < payload.size(); off += chunk) {
      const auto len = std::min(chunk, payload.size() - off);
      std::vector<std::uint8_t> body(payload.begin() + static_cast<std::ptrdiff_t>(off),
                                     payload.begin() + static_cast<std::ptrdiff_t>(off + len));
      const auto body_frame = encode_frame(3, 1, body);
      bytes.insert(bytes.end(), body_frame.begin(), body_frame.end());
    }
    if (payload.empty()) {
      const auto body_frame = encode_frame(3, 1, {});
      bytes.insert(bytes.end(), body_frame.begin(), body_frame.end());
    }
    conn->send(std::move(bytes));  // one buffer: frames never interleave
    return {};
  }

  Result<Subscription> subscribe(std::string_view topic, QosLevel qos,
                                 MessageSink sink) override {
    if (qos != QosLevel::at_most_once) {
      return make_error(errc::unsupported_qos,
                        "amqp consumers run no-ack; qos 0 only");
    }
    std::shared_ptr<net::TcpConn> conn;
    std::uint64_t id = 0;
    {
      std::lock_guard lock(mu_);
      conn = conn_;
      if (!connected_.load() || !conn || !conn->open()) {
        return make_error(errc::not_connected, "session closed");
      }
      id = next_id_++;
      subs_.push_back({std::string(topic), std::move(sink)});
    }
    if (auto r = establish_consumer(conn, std::string(topic)); !r.ok()) {
      std::lock_guard lock(mu_);
      subs_.pop_back();
      return r.error();
    }
    return Subscription{id, std::string(topic)};
  }

  void disconnect() override {
    if (!connected_.exchange(false)) return;
    std::shared_ptr<net::TcpConn> conn;
    {
      std::lock_guard lock(mu_);
      conn = conn_;
    }
    if (conn && conn->open()) {
      Writer args;
      args.u16(200);
      args.shortstr("bye");
      args.u16(0);
      args.u16(0);
      conn->send(method_frame(0, kClassConnection, 50, std::move(args)));
      conn->close();
    }
  }

  Result<void> reconnect() override {
    if (connected_.load()) return {};
    return dial(true);
  }

  bool connected() const override { return connected_.load(); }
  TransportKind kind() const override { return TransportKind::amqp; }
  const std::string& client_id() const override { return options_.client_id; }

 private:
  struct SubEntry {
    std::string topic;
    MessageSink sink;
  };

  // Exclusive auto-delete server-named queue bound to the direct exchange,
  // consumed with no-ack.
  Result<void> establish_consumer(const std::shared_ptr<net::TcpConn>& conn,
                                  const std::string& topic) {
    {
      Writer args;
      args.u16(0);
      args.shortstr("");     // server-named
      args.u8(0x08 | 0x04);  // exclusive + auto-delete
      args.empty_table();
      conn->send(method_frame(1, kClassQueue, 10, std::move(args)));
    }
    auto declared = expect(kClassQueue, 11);
    if (!declared.ok()) return declared.error();
    std::string queue;
    {
      Reader r(declared.value());
      if (!r.shortstr(queue)) {
        return make_error(errc::io_error, "amqp: bad queue.declare-ok");
      }
    }
    {
      Writer args;
      args.u16(0);
      args.shortstr(queue);
      args.shortstr(kExchange);
      args.shortstr(topic);
      args.u8(0);
      args.empty_table();
      conn->send(method_frame(1, kClassQueue, 20, std::move(args)));
    }
    if (auto r = expect(kClassQueue, 21); !r.ok()) return r.error();
    {
      Writer args;
      args.u16(0);
      args.shortstr(queue);
      args.shortstr("");  // server-named consumer tag
      args.u8(0x02);      // no-ack
      args.empty_table();
      conn->send(method_frame(1, kClassBasic, 20, std::move(args)));
    }
    if (auto r = expect(kClassBasic, 21); !r.ok()) return r.error();
    return {};
  }

  // Blocks until the named method arrives; the handshake and consumer
  // setup are strictly sequential RPCs. Replies that raced ahead of the
  // caller sit in the mailbox.
  Result<std::vector<std::uint8_t>> expect(std::uint16_t class_id,
                                           std::uint16_t method_id) {
    auto waiter = std::make_shared<ReplyWaiter>();
    waiter->key = key_of(class_id, method_id);
    {
      std::lock_guard lock(mu_);
      auto it = mailbox_.find(waiter->key);
      if (it != mailbox_.end() && !it->second.empty()) {
        auto args = std::move(it->second.front());
        it->second.pop_front();
        return args;
      }
      waiter_ = waiter;
    }
    auto fut = waiter->value.get_future();
    if (fut.wait_for(std::chrono::milliseconds(options_.connect_timeout_ms)) !=
        std::future_status::ready) {
      std::lock_guard lock(mu_);
      waiter_.reset();
      return make_error(errc::connect_failed, "amqp: handshake step timed out");
    }
    return fut.get();
  }

  static std::uint32_t key_of(std::uint16_t class_id, std::uint16_t method_id) {
    return (std::uint32_t(class_id) << 16) | method_id;
  }

  void on_data(const std::shared_ptr<net::TcpConn>& conn, FrameParser& parser,
               const std::uint8_t* data, std::size_t n) {
    const auto recv_ts = wall_now_ns();
    parser.feed(data, n);
    while (auto f = parser.next()) handle_frame(conn, *f, recv_ts);
    if (parser.corrupt()) conn->close();
  }

  void handle_frame(const std::shared_ptr<net::TcpConn>& conn, const Frame& f,
                    std::uint64_t recv_ts) {
    if (f.type == 1) {
      Reader r(f.payload);
      std::uint16_t class_id = 0, method_id = 0;
      if (!r.u16(class_id) || !r.u16(method_id)) return;

      if (class_id == kClassBasic && method_id == 60) {  // basic.deliver
        std::string tag, exchange, key;
        std::uint64_t delivery_tag = 0;
        std::uint8_t redelivered = 0;
        if (r.shortstr(tag) && r.u64(delivery_tag) && r.u8(redelivered) &&
            r.shortstr(exchange) && r.shortstr(key)) {
          rx_topic_ = key;
          rx_body_.clear();
          rx_expected_ = 0;
          rx_active_ = true;
        }
        return;
      }
      if ((class_id == kClassConnection && method_id == 50) ||
          (class_id == kClassChannel && method_id == 40)) {
        std::uint16_t code = 0;
        std::string text;
        r.u16(code);
        r.shortstr(text);
        fail_waiter(make_error(errc::connect_failed,
                               "amqp: server closed: " + text));
        conn->close();
        return;
      }

      std::vector<std::uint8_t> args(f.payload.begin() + 4, f.payload.end());
      std::shared_ptr<ReplyWaiter> waiter;
      {
        std::lock_guard lock(mu_);
        if (waiter_ && waiter_->key == key_of(class_id, method_id)) {
          waiter = waiter_;
          waiter_.reset();
        } else {
          // No one is waiting yet; park the reply for the next expect().
          mailbox_[key_of(class_id, method_id)].push_back(std::move(args));
        }
      }
      if (waiter) waiter->value.set_value(std::move(args));
      return;
    }
    if (f.type == 2 && rx_active_) {  // content header
      Reader r(f.payload);
      std::uint16_t class_id = 0, weight = 0;
      std::uint64_t size = 0;
      if (r.u16(class_id) && r.u16(weight) && r.u64(size)) {
        rx_expected_ = size;
        if (size == 0) deliver(recv_ts);
      }
      return;
    }
    if (f.type == 3 && rx_active_) {  // body
      rx_body_.insert(rx_body_.end(), f.payload.begin(), f.payload.end());
      if (rx_body_.size() >= rx_expected_) deliver(recv_ts);
      return;
    }
  }

  void deliver(std::uint64_t recv_ts) {
    rx_active_ = false;
    MessageSink sink;
    {
      std::lock_guard lock(mu_);
      for (const auto& s : subs_) {
        if (s.topic == rx_topic_) {
          sink = s.sink;
          break;
        }
      }
    }
    if (sink) {
      sink(rx_topic_, std::span<const std::uint8_t>(rx_body_), recv_ts);
    }
    rx_body_.clear();
  }

  void fail_waiter(Error e) {
    std::shared_ptr<ReplyWaiter> waiter;
    {
      std::lock_guard lock(mu_);
      waiter.swap(waiter_);
    }
    if (waiter) waiter->value.set_value(std::move(e));
  }

  void on_link_down(const std::shared_ptr<net::TcpConn>& conn) {
    {
      std::lock_guard lock(mu_);
      if (conn_ != conn) return;
    }
    connected_.store(false);
    fail_waiter(make_error(errc::connect_failed, "link closed"));
    if (link_event_due_.exchange(false)) {
      record(ConnectionEventKind::disconnect);
    }
  }

  void record(ConnectionEventKind kind) {
    if (options_.events) {
      options_.events->record(options_.client_id, kind, wall_now_ns());
    }
  }

  struct ReplyWaiter {
    std::uint32_t key = 0;
    std::promise<Result<std::vector<std::uint8_t>>> value;
  };

  net::IoRuntime& io_;
  net::Uri uri_;
  TransportOptions options_;

  std::mutex mu_;
  std::shared_ptr<net::TcpConn> conn_;
  std::shared_ptr<ReplyWaiter> waiter_;
  std::map<std::uint32_t, std::deque<std::vector<std::uint8_t>>> mailbox_;
  std::vector<SubEntry> subs_;
  std::uint64_t next_id_ = 1;
  std::uint32_t frame_max_ = 131072;
  std::atomic<bool> connected_{false};
  std::atomic<bool> link_event_due_{false};

  // Delivery assembly; only touched on the link strand.
  std::string rx_topic_;
  std::vector<std::uint8_t> rx_body_;
  std::uint64_t rx_expected_ = 0;
  bool rx_active_ = false;
};

}  // namespace

Result<SessionPtr> make_amqp_session(net::IoRuntime& io, const net::Uri& uri,
                                     TransportOptions options) {
  auto session = std::make_shared<AmqpSession>(io, uri, std::move(options));
  if (auto r = session->dial(false); !r.ok()) return r.error();
  return SessionPtr(new SharedSessionHandle(std::move(session)));
}

}  // namespace mqbench::transport::detail
