#include <atomic>
#include <charconv>
#include <future>
#include <mutex>

#include "../net/tcp_conn.hpp"
#include "adapters.hpp"
#include "mqbench/clock.hpp"

namespace mqbench::transport::detail {
namespace {

// Incremental parser for the NATS text protocol: control lines terminated
// by CRLF, MSG lines followed by a fixed-size payload plus CRLF.
class NatsParser {
 public:
  struct Msg {
    std::string subject;
    std::uint64_t sid = 0;
    std::vector<std::uint8_t> payload;
  };
  struct Event {
    enum Kind { info, ping, pong, ok, err, msg } kind;
    std::string line;  // raw control line (without CRLF)
    Msg message;       // for kind == msg
  };

  void feed(const std::uint8_t* data, std::size_t n) {
    buf_.insert(buf_.end(), data, data + n);
  }

  std::optional<Event> next() {
    while (true) {
      if (want_payload_) {
        if (buf_.size() < payload_len_ + 2) return std::nullopt;
        Event ev;
        ev.kind = Event::msg;
        ev.message = std::move(pending_);
        ev.message.payload.assign(buf_.begin(),
                                  buf_.begin() + static_cast<std::ptrdiff_t>(payload_len_));
        buf_.erase(buf_.begin(),
                   buf_.begin() + static_cast<std::ptrdiff_t>(payload_len_ + 2));
        want_payload_ = false;
        return ev;
      }
      const auto line = take_line();
      if (!line) return std::nullopt;
      if (line->rfind("MSG ", 0) == 0) {
        if (!parse_msg_line(*line)) {
          corrupt_ = true;
          return std::nullopt;
        }
        continue;  // loop to read the payload
      }
      Event ev;
      ev.line = *line;
      if (line->rfind("INFO", 0) == 0) ev.kind = Event::info;
      else if (*line == "PING") ev.kind = Event::ping;
      else if (*line == "PONG") ev.kind = Event::pong;
      else if (line->rfind("+OK", 0) == 0) ev.kind = Event::ok;
      else if (line->rfind("-ERR", 0) == 0) ev.kind = Event::err;
      else continue;  // ignore unknown verbs
      return ev;
    }
  }

  bool corrupt() const { return corrupt_; }

 private:
  std::optional<std::string> take_line() {
    for (std::size_t i = 0; i + 1 < buf_.size(); ++i) {
      if (buf_[i] == '\r' && buf_[i + 1] == '\n') {
        std::string line(buf_.begin(), buf_.begin() + static_cast<std::ptrdiff_t>(i));
        buf_.erase(buf_.begin(), buf_.begin() + static_cast<std::ptrdiff_t>(i + 2));
        return line;
      }
    }
    return std::nullopt;
  }

  // MSG <subject> <sid> [reply-to] <#bytes>
  bool parse_msg_line(const std::string& line) {
    std::vector<std::string> tok;
    std::size_t pos = 0;
    while (pos < line.size()) {
      const auto space = line.find(' ', pos);
      tok.push_back(line.substr(pos, space - pos));
      if (space == std::string::npos) break;
      pos = space + 1;
    }
    if (tok.size() != 4 && tok.size() != 5) return false;
    pending_.subject = tok[1];
    const auto parse_u64 = [](const std::string& s, std::uint64_t& out) {
      const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
      return ec == std::errc{} && p == s.data() + s.size();
    };
    std::uint64_t len = 0;
    if (!parse_u64(tok[2], pending_.sid) || !parse_u64(tok.back(), len)) {
      return false;
    }
    payload_len_ = len;
    want_payload_ = true;
    return true;
  }

  std::vector<std::uint8_t> buf_;
  Msg pending_;
  std::size_t payload_len_ = 0;
  bool want_payload_ = false;
  bool corrupt_ = false;
};

class NatsSession final : public Session,
                          public std::enable_shared_from_this<NatsSession> {
 public:
  NatsSession(net::IoRuntime& io, net::Uri uri, TransportOptions options)
      : io_(io), uri_(std::move(uri)), options_(std::move(options)) {}

  ~NatsSession() override { disconnect(); }

  Result<void> dial(bool is_reconnect) {
    auto conn = std::make_shared<net::TcpConn>(io_.ctx());
    const auto port = uri_.port ? uri_.port : 4222;
    if (auto r = conn->connect(uri_.host, port, options_.connect_timeout_ms);
        !r.ok()) {
      return r;
    }
    auto parser = std::make_shared<NatsParser>();
    auto ready = std::make_shared<std::promise<Result<void>>>();
    {
      std::lock_guard lock(mu_);
      conn_ = conn;
      ready_ = ready;
    }
    conn->start(
        [self = shared_from_this(), conn, parser](const std::uint8_t* d,
                                                  std::size_t n) {
          self->on_data(conn, *parser, d, n);
        },
        [self = shared_from_this(), conn](const boost::system::error_code&) {
          self->on_link_down(conn);
        });

    // Handshake: INFO arrives first; we answer CONNECT and confirm the
    // round trip with PING/PONG before declaring the session live.
    auto fut = ready->get_future();
    if (fut.wait_for(std::chrono::milliseconds(options_.connect_timeout_ms)) !=
        std::future_status::ready) {
      conn->close();
      return make_error(errc::connect_failed, "nats handshake timed out");
    }
    if (auto r = fut.get(); !r.ok()) return r;

    connected_.store(true);
    link_event_due_.store(true);

    if (is_reconnect) {
      std::lock_guard lock(mu_);
      for (const auto& s : subs_) {
        conn->send(text_frame("SUB " + s.subject + " " + std::to_string(s.sid)));
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
      return make_error(errc::unsupported_qos, "nats supports qos 0 only");
    }
    std::shared_ptr<net::TcpConn> conn;
    {
      std::lock_guard lock(mu_);
      conn = conn_;
    }
    if (!connected_.load() || !conn || !conn->open()) {
      return make_error(errc::not_connected, "session closed");
    }
    std::string head = "PUB ";
    head.append(topic);
    head += " " + std::to_string(payload.size()) + "\r\n";
    std::vector<std::uint8_t> frame(head.begin(), head.end());
    frame.insert(frame.end(), payload.begin(), payload.end());
    frame.push_back('\r');
    frame.push_back('\n');
    conn->send(std::move(frame));
    return {};
  }

  Result<Subscription> subscribe(std::string_view topic, QosLevel qos,
                                 MessageSink sink) override {
    if (qos != QosLevel::at_most_once) {
      return make_error(errc::unsupported_qos, "nats supports qos 0 only");
    }
    std::shared_ptr<net::TcpConn> conn;
    std::uint64_t sid = 0;
    {
      std::lock_guard lock(mu_);
      conn = conn_;
      if (!connected_.load() || !conn || !conn->open()) {
        return make_error(errc::not_connected, "session closed");
      }
      sid = next_sid_++;
      subs_.push_back({std::string(topic), sid, std::move(sink)});
    }
    conn->send(text_frame("SUB " + std::string(topic) + " " + std::to_string(sid)));
    return Subscription{sid, std::string(topic)};
  }

  void disconnect() override {
    if (!connected_.exchange(false)) return;
    std::shared_ptr<net::TcpConn> conn;
    {
      std::lock_guard lock(mu_);
      conn = conn_;
    }
    if (conn) conn->close();
  }

  Result<void> reconnect() override {
    if (connected_.load()) return {};
    return dial(true);
  }

  bool connected() const override { return connected_.load(); }
  TransportKind kind() const override { return TransportKind::nats; }
  const std::string& client_id() const override { return options_.client_id; }

 private:
  struct SubEntry {
    std::string subject;
    std::uint64_t sid = 0;
    MessageSink sink;
  };

  static std::vector<std::uint8_t> text_frame(std::string line) {
    line += "\r\n";
    return {line.begin(), line.end()};
  }

  void on_data(const std::shared_ptr<net::TcpConn>& conn, NatsParser& parser,
               const std::uint8_t* data, std::size_t n) {
    const auto recv_ts = wall_now_ns();
    parser.feed(data, n);
    while (auto ev = parser.next()) {
      switch (ev->kind) {
        case NatsParser::Event::info: {
          std::string connect =
              R"(CONNECT {"verbose":false,"pedantic":false,"tls_required":false,)"
              R"("name":")" + options_.client_id + R"(","lang":"cpp","version":"1.0",)"
              R"("protocol":0)";
          if (options_.credentials) {
            connect += R"(,"user":")" + options_.credentials->username +
                       R"(","pass":")" + options_.credentials->password + R"(")";
          }
          connect += "}";
          conn->send(text_frame(std::move(connect)));
          conn->send(text_frame("PING"));
          break;
        }
        case NatsParser::Event::pong: {
          settle_ready(Result<void>{});
          break;
        }
        case NatsParser::Event::ping:
          conn->send(text_frame("PONG"));
          break;
        case NatsParser::Event::err:
          settle_ready(make_error(errc::connect_failed, ev->line));
          conn->close();
          break;
        case NatsParser::Event::msg: {
          MessageSink sink;
          {
            std::lock_guard lock(mu_);
            for (const auto& s : subs_) {
              if (s.sid == ev->message.sid) {
                sink = s.sink;
                break;
              }
            }
          }
          if (sink) {
            sink(ev->message.subject,
                 std::span<const std::uint8_t>(ev->message.payload), recv_ts);
          }
          break;
        }
        case NatsParser::Event::ok:
        default:
          break;
      }
    }
    if (parser.corrupt()) conn->close();
  }

  void settle_ready(Result<void> r) {
    std::shared_ptr<std::promise<Result<void>>> ready;
    {
      std::lock_guard lock(mu_);
      ready.swap(ready_);
    }
    if (ready) ready->set_value(std::move(r));
  }

  void on_link_down(const std::shared_ptr<net::TcpConn>& conn) {
    {
      std::lock_guard lock(mu_);
      if (conn_ != conn) return;
    }
    connected_.store(false);
    settle_ready(make_error(errc::connect_failed, "link closed"));
    if (link_event_due_.exchange(false)) {
      record(ConnectionEventKind::disconnect);
    }
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
  std::shared_ptr<std::promise<Result<void>>> ready_;
  std::vector<SubEntry> subs_;
  std::uint64_t next_sid_ = 1;
  std::atomic<bool> connected_{false};
  std::atomic<bool> link_event_due_{false};
};

}  // namespace

Result<SessionPtr> make_nats_session(net::IoRuntime& io, const net::Uri& uri,
                                     TransportOptions options) {
  auto session = std::make_shared<NatsSession>(io, uri, std::move(options));
  if (auto r = session->dial(false); !r.ok()) return r.error();
  return SessionPtr(new SharedSessionHandle(std::move(session)));
}

}  // namespace mqbench::transport::detail
