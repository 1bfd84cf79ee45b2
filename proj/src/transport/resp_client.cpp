#include <atomic>
#include <charconv>
#include <future>
#include <mutex>

#include "../net/tcp_conn.hpp"
#include "adapters.hpp"
#include "mqbench/clock.hpp"

namespace mqbench::transport::detail {
namespace {

// RESP2 value: we only need simple strings, errors, integers, bulk strings
// and flat arrays of those.
struct RespValue {
  enum Kind { simple, error, integer, bulk, nil, array } kind = nil;
  std::string text;                // simple/error/bulk payload
  std::int64_t number = 0;         // integer
  std::vector<RespValue> items;    // array
};

class RespParser {
 public:
  void feed(const std::uint8_t* data, std::size_t n) {
    buf_.insert(buf_.end(), data, data + n);
  }

  std::optional<RespValue> next() {
    std::size_t pos = 0;
    RespValue v;
    if (!parse(pos, v)) return std::nullopt;
    buf_.erase(buf_.begin(), buf_.begin() + static_cast<std::ptrdiff_t>(pos));
    return v;
  }

  bool corrupt() const { return corrupt_; }

 private:
  bool parse(std::size_t& pos, RespValue& out) {
    if (pos >= buf_.size()) return false;
    const char tag = static_cast<char>(buf_[pos]);
    std::string line;
    std::size_t after = 0;
    if (!take_line(pos + 1, line, after)) return false;
    switch (tag) {
      case '+':
        out = {RespValue::simple, line, 0, {}};
        pos = after;
        return true;
      case '-':
        out = {RespValue::error, line, 0, {}};
        pos = after;
        return true;
      case ':': {
        std::int64_t n = 0;
        if (!to_int(line, n)) return fail();
        out = {RespValue::integer, {}, n, {}};
        pos = after;
        return true;
      }
      case '$': {
        std::int64_t len = 0;
        if (!to_int(line, len)) return fail();
        if (len < 0) {
          out = {RespValue::nil, {}, 0, {}};
          pos = after;
          return true;
        }
        const auto need = after + static_cast<std::size_t>(len) + 2;
        if (buf_.size() < need) return false;
        out = {RespValue::bulk,
               std::string(buf_.begin() + static_cast<std::ptrdiff_t>(after),
                           buf_.begin() + static_cast<std::ptrdiff_t>(after + len)),
               0,
               {}};
        pos = need;
        return true;
      }
      case '*': {
        std::int64_t count = 0;
        if (!to_int(line, count)) return fail();
        if (count < 0) {
          out = {RespValue::nil, {}, 0, {}};
          pos = after;
          return true;
        }
        RespValue arr;
        arr.kind = RespValue::array;
        std::size_t cursor = after;
        for (std::int64_t i = 0; i < count; ++i) {
          RespValue item;
          if (!parse(cursor, item)) return false;
          arr.items.push_back(std::move(item));
        }
        out = std::move(arr);
        pos = cursor;
        return true;
      }
      default:
        return fail();
    }
  }

  bool take_line(std::size_t from, std::string& line, std::size_t& after) {
    for (std::size_t i = from; i + 1 < buf_.size(); ++i) {
      if (buf_[i] == '\r' && buf_[i + 1] == '\n') {
        line.assign(buf_.begin() + static_cast<std::ptrdiff_t>(from),
                    buf_.begin() + static_cast<std::ptrdiff_t>(i));
        after = i + 2;
        return true;
      }
    }
    return false;
  }

  static bool to_int(const std::string& s, std::int64_t& out) {
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc{} && p == s.data() + s.size();
  }

  bool fail() {
    corrupt_ = true;
    return false;
  }

  std::vector<std::uint8_t> buf_;
  bool corrupt_ = false;
};

std::vector<std::uint8_t> encode_resp(
    const std::vector<std::pair<const void*, std::size_t>>& args) {
  std::string head = "*" + std::to_string(args.size()) + "\r\n";
  std::vector<std::uint8_t> out(head.begin(), head.end());
  for (const auto& [data, len] : args) {
    const std::string lead = "$" + std::to_string(len) + "\r\n";
    out.insert(out.end(), lead.begin(), lead.end());
    const auto* bytes = static_cast<const std::uint8_t*>(data);
    out.insert(out.end(), bytes, bytes + len);
    out.push_back('\r');
    out.push_back('\n');
  }
  return out;
}

std::vector<std::uint8_t> encode_resp_strings(
    std::initializer_list<std::string_view> args) {
  std::vector<std::pair<const void*, std::size_t>> raw;
  for (const auto& a : args) raw.emplace_back(a.data(), a.size());
  return encode_resp(raw);
}

class RespSession final : public Session,
                          public std::enable_shared_from_this<RespSession> {
 public:
  RespSession(net::IoRuntime& io, net::Uri uri, TransportOptions options)
      : io_(io), uri_(std::move(uri)), options_(std::move(options)) {}

  Result<void> dial(bool is_reconnect) {
    auto conn = std::make_shared<net::TcpConn>(io_.ctx());
    const auto port = uri_.port ? uri_.port : 6379;
    if (auto r = conn->connect(uri_.host, port, options_.connect_timeout_ms);
        !r.ok()) {
      return r;
    }
    auto parser = std::make_shared<RespParser>();
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

    if (options_.credentials) {
      conn->send(encode_resp_strings({"AUTH", options_.credentials->username,
                                         options_.credentials->password}));
    }
    conn->send(encode_resp_strings({"PING"}));

    auto fut = ready->get_future();
    if (fut.wait_for(std::chrono::milliseconds(options_.connect_timeout_ms)) !=
        std::future_status::ready) {
      conn->close();
      return make_error(errc::connect_failed, "redis PING timed out");
    }
    if (auto r = fut.get(); !r.ok()) return r;

    connected_.store(true);
    link_event_due_.store(true);
    if (is_reconnect) {
      std::lock_guard lock(mu_);
      for (const auto& s : subs_) {
        conn->send(encode_resp_strings({"SUBSCRIBE", s.channel}));
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
      return make_error(errc::unsupported_qos, "resp supports qos 0 only");
    }
    std::shared_ptr<net::TcpConn> conn;
    {
      std::lock_guard lock(mu_);
      conn = conn_;
    }
    if (!connected_.load() || !conn || !conn->open()) {
      return make_error(errc::not_connected, "session closed");
    }
    conn->send(publish_frame(topic, payload));
    return {};
  }

  Result<Subscription> subscribe(std::string_view topic, QosLevel qos,
                                 MessageSink sink) override {
    if (qos != QosLevel::at_most_once) {
      return make_error(errc::unsupported_qos, "resp supports qos 0 only");
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
    conn->send(encode_resp_strings({"SUBSCRIBE", topic}));
    return Subscription{id, std::string(topic)};
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
  TransportKind kind() const override { return TransportKind::resp; }
  const std::string& client_id() const override { return options_.client_id; }

 private:
  struct SubEntry {
    std::string channel;
    MessageSink sink;
  };

  static std::vector<std::uint8_t> publish_frame(
      std::string_view topic, std::span<const std::uint8_t> payload) {
    return encode_resp({{"PUBLISH", 7},
                        {topic.data(), topic.size()},
                        {payload.data(), payload.size()}});
  }

  void on_data(const std::shared_ptr<net::TcpConn>& conn, RespParser& parser,
               const std::uint8_t* data, std::size_t n) {
    const auto recv_ts = wall_now_ns();
    parser.feed(data, n);
    while (auto v = parser.next()) handle_value(conn, *v, recv_ts);
    if (parser.corrupt()) conn->close();
  }

  void handle_value(const std::shared_ptr<net::TcpConn>&, const RespValue& v,
                    std::uint64_t recv_ts) {
    if (v.kind == RespValue::simple && v.text == "PONG") {
      settle_ready(Result<void>{});
      return;
    }
    if (v.kind == RespValue::error) {
      settle_ready(make_error(errc::connect_failed, v.text));
      return;
    }
    // Push message: ["message", channel, payload]
    if (v.kind == RespValue::array && v.items.size() == 3 &&
        v.items[0].kind == RespValue::bulk && v.items[0].text == "message") {
      MessageSink sink;
      {
        std::lock_guard lock(mu_);
        for (const auto& s : subs_) {
          if (s.channel == v.items[1].text) {
            sink = s.sink;
            break;
          }
        }
      }
      if (sink) {
        const auto& payload = v.items[2].text;
        sink(v.items[1].text,
             std::span<const std::uint8_t>(
                 reinterpret_cast<const std::uint8_t*>(payload.data()),
                 payload.size()),
             recv_ts);
      }
    }
    // subscribe confirmations and PUBLISH receiver counts are ignored
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
  std::uint64_t next_id_ = 1;
  std::atomic<bool> connected_{false};
  std::atomic<bool> link_event_due_{false};
};

}  // namespace

Result<SessionPtr> make_resp_session(net::IoRuntime& io, const net::Uri& uri,
                                     TransportOptions options) {
  auto session = std::make_shared<RespSession>(io, uri, std::move(options));
  if (auto r = session->dial(false); !r.ok()) return r.error();
  return SessionPtr(new SharedSessionHandle(std::move(session)));
}

}  // namespace mqbench::transport::detail
