#include <atomic>
#include <deque>
#include <future>
#include <mutex>
#include <optional>
#include <utility>

#include <nlohmann/json.hpp>

#include "../net/tcp_conn.hpp"
#include "adapters.hpp"
#include "mqbench/clock.hpp"
#include "mqbench/util/base64.hpp"

// Zenoh adapter speaking the router's REST plugin: HTTP PUT to publish,
// server-sent events to subscribe. Payloads travel base64-wrapped so
// arbitrary bytes survive the JSON value field.
namespace mqbench::transport::detail {
namespace {

// Incremental HTTP/1.1 response reader, supporting fixed content-length
// bodies and endless SSE streams.
class HttpResponseParser {
 public:
  struct Response {
    int status = 0;
    std::size_t content_length = 0;
    bool event_stream = false;
  };

  void feed(const std::uint8_t* data, std::size_t n) {
    buf_.insert(buf_.end(), data, data + n);
  }

  // Yields the next response head once the blank line is in. For event
  // streams the caller switches to next_event().
  std::optional<Response> next_head() {
    const auto pos = find_blank();
    if (pos == std::string::npos) return std::nullopt;
    const std::string head(buf_.begin(),
                           buf_.begin() + static_cast<std::ptrdiff_t>(pos));
    buf_.erase(buf_.begin(), buf_.begin() + static_cast<std::ptrdiff_t>(pos + 4));

    Response r;
    const auto line_end = head.find("\r\n");
    const auto status_line = head.substr(0, line_end);
    if (status_line.size() >= 12) r.status = std::atoi(status_line.c_str() + 9);
    auto lower = head;
    for (auto& c : lower) c = static_cast<char>(std::tolower(c));
    if (const auto cl = lower.find("content-length:"); cl != std::string::npos) {
      r.content_length =
          static_cast<std::size_t>(std::atoll(lower.c_str() + cl + 15));
    }
    r.event_stream = lower.find("content-type: text/event-stream") !=
                     std::string::npos;
    chunked_ = lower.find("transfer-encoding: chunked") != std::string::npos;
    return r;
  }

  bool take_body(std::size_t len, std::vector<std::uint8_t>& out) {
    if (buf_.size() < len) return false;
    out.assign(buf_.begin(), buf_.begin() + static_cast<std::ptrdiff_t>(len));
    buf_.erase(buf_.begin(), buf_.begin() + static_cast<std::ptrdiff_t>(len));
    return true;
  }

  // One SSE event = lines until a blank line; data lines concatenated.
  // Chunked transfer framing, if present, is stripped first.
  std::optional<std::string> next_event() {
    if (chunked_) strip_chunk_frames();
    const auto gap = find_event_gap();
    if (!gap) return std::nullopt;
    std::string block = event_buf_.substr(0, gap->first);
    event_buf_.erase(0, gap->second);
    std::string data;
    std::size_t at = 0;
    while (at < block.size()) {
      auto end = block.find('\n', at);
      if (end == std::string::npos) end = block.size();
      auto line = block.substr(at, end - at);
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.rfind("data:", 0) == 0) {
        auto v = line.substr(5);
        if (!v.empty() && v.front() == ' ') v.erase(0, 1);
        data += v;
      }
      at = end + 1;
    }
    if (data.empty()) return next_event();
    return data;
  }

 private:
  std::size_t find_blank() const {
    for (std::size_t i = 0; i + 3 < buf_.size(); ++i) {
      if (buf_[i] == '\r' && buf_[i + 1] == '\n' && buf_[i + 2] == '\r' &&
          buf_[i + 3] == '\n') {
        return i;
      }
    }
    return std::string::npos;
  }

  void strip_chunk_frames() {
    // Decode whatever complete chunks are buffered into event_buf_.
    while (true) {
      std::size_t line_end = std::string::npos;
      for (std::size_t i = 0; i + 1 < buf_.size(); ++i) {
        if (buf_[i] == '\r' && buf_[i + 1] == '\n') {
          line_end = i;
          break;
        }
      }
      if (line_end == std::string::npos) return;
      std::size_t chunk_len = 0;
      for (std::size_t i = 0; i < line_end; ++i) {
        const char c = static_cast<char>(buf_[i]);
        if (c == ';') break;
        chunk_len <<= 4;
        if (c >= '0' && c <= '9') chunk_len |= std::size_t(c - '0');
        else if (c >= 'a' && c <= 'f') chunk_len |= std::size_t(c - 'a' + 10);
        else if (c >= 'A' && c <= 'F') chunk_len |= std::size_t(c - 'A' + 10);
        else return;
      }
      const auto total = line_end + 2 + chunk_len + 2;
      if (buf_.size() < total) return;
      event_buf_.insert(event_buf_.end(),
                        buf_.begin() + static_cast<std::ptrdiff_t>(line_end + 2),
                        buf_.begin() + static_cast<std::ptrdiff_t>(line_end + 2 + chunk_len));
      buf_.erase(buf_.begin(), buf_.begin() + static_cast<std::ptrdiff_t>(total));
      if (chunk_len == 0) return;
    }
  }

  // {block length, bytes to consume including the blank-line separator}.
  std::optional<std::pair<std::size_t, std::size_t>> find_event_gap() {
    if (!chunked_ && !buf_.empty()) {
      // Identity encoding: events arrive directly in the stream buffer.
      event_buf_.insert(event_buf_.end(), buf_.begin(), buf_.end());
      buf_.clear();
    }
    for (std::size_t i = 0; i + 1 < event_buf_.size(); ++i) {
      if (i + 3 < event_buf_.size() && event_buf_[i] == '\r' &&
          event_buf_[i + 1] == '\n' && event_buf_[i + 2] == '\r' &&
          event_buf_[i + 3] == '\n') {
        return std::make_pair(i + 2, i + 4);
      }
      if (event_buf_[i] == '\n' && event_buf_[i + 1] == '\n') {
        return std::make_pair(i + 1, i + 2);
      }
    }
    return std::nullopt;
  }

  std::vector<std::uint8_t> buf_;
  std::string event_buf_;
  bool chunked_ = false;
};

std::vector<std::uint8_t> to_bytes(const std::string& s) {
  return {s.begin(), s.end()};
}

class ZenohSession final : public Session,
                           public std::enable_shared_from_this<ZenohSession> {
 public:
  ZenohSession(net::IoRuntime& io, net::Uri uri, TransportOptions options)
      : io_(io), uri_(std::move(uri)), options_(std::move(options)) {}

  Result<void> dial(bool is_reconnect) {
    auto conn = std::make_shared<net::TcpConn>(io_.ctx());
    if (auto r = dial_control(conn); !r.ok()) return r;
    {
      std::lock_guard lock(mu_);
      control_ = conn;
      puts_inflight_ = 0;
      put_queue_.clear();
    }
    connected_.store(true);
    link_event_due_.store(true);

    if (is_reconnect) {
      std::vector<SubEntry> subs;
      {
        std::lock_guard lock(mu_);
        subs = subs_;
      }
      for (auto& s : subs) {
        if (auto r = open_sse(s); !r.ok()) return r;
        std::lock_guard lock(mu_);
        for (auto& live : subs_) {
          if (live.id == s.id) live.conn = s.conn;
        }
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
      return make_error(errc::unsupported_qos, "zenoh supports qos 0 only");
    }
    std::shared_ptr<net::TcpConn> conn;
    {
      std::lock_guard lock(mu_);
      conn = control_;
      if (!connected_.load() || !conn || !conn->open()) {
        return make_error(errc::not_connected, "session closed");
      }
      if (put_queue_.size() >= kMaxQueuedPuts) {
        return make_error(errc::io_error, "zenoh publish queue overflow");
      }
      const std::string body = util::base64_encode(payload);
      std::string req = "PUT /" + std::string(topic) + " HTTP/1.1\r\n";
      req += "Host: " + uri_.host + "\r\n";
      req += "Content-Type: text/plain\r\n";
      req += "Content-Length: " + std::to_string(body.size()) + "\r\n\r\n";
      req += body;
      // One request in flight at a time: the reply handler feeds the queue.
      if (puts_inflight_ == 0) {
        ++puts_inflight_;
        conn->send(to_bytes(req));
      } else {
        put_queue_.push_back(to_bytes(req));
      }
    }
    return {};
  }

  Result<Subscription> subscribe(std::string_view topic, QosLevel qos,
                                 MessageSink sink) override {
    if (qos != QosLevel::at_most_once) {
      return make_error(errc::unsupported_qos, "zenoh supports qos 0 only");
    }
    if (!connected_.load()) {
      return make_error(errc::not_connected, "session closed");
    }
    SubEntry entry;
    entry.id = next_id_++;
    entry.topic = std::string(topic);
    entry.sink = std::move(sink);
    if (auto r = open_sse(entry); !r.ok()) return r.error();
    std::lock_guard lock(mu_);
    subs_.push_back(entry);
    return Subscription{entry.id, entry.topic};
  }

  void disconnect() override {
    if (!connected_.exchange(false)) return;
    std::shared_ptr<net::TcpConn> control;
    std::vector<std::shared_ptr<net::TcpConn>> streams;
    {
      std::lock_guard lock(mu_);
      control = control_;
      for (auto& s : subs_) {
        if (s.conn) streams.push_back(s.conn);
      }
    }
    if (control) control->close();
    for (auto& c : streams) c->close();
  }

  Result<void> reconnect() override {
    if (connected_.load()) return {};
    return dial(true);
  }

  bool connected() const override { return connected_.load(); }
  TransportKind kind() const override { return TransportKind::zenoh; }
  const std::string& client_id() const override { return options_.client_id; }

 private:
  static constexpr std::size_t kMaxQueuedPuts = 65536;

  struct SubEntry {
    std::uint64_t id = 0;
    std::string topic;
    MessageSink sink;
    std::shared_ptr<net::TcpConn> conn;
  };

  std::uint16_t port() const { return uri_.port ? uri_.port : 8000; }

  // Probes the REST endpoint with a GET so a dead router fails connect()
  // rather than the first publish, then leaves the connection up for PUTs.
  Result<void> dial_control(const std::shared_ptr<net::TcpConn>& conn) {
    if (auto r = conn->connect(uri_.host, port(), options_.connect_timeout_ms);
        !r.ok()) {
      return r;
    }
    auto parser = std::make_shared<HttpResponseParser>();
    auto ready = std::make_shared<std::promise<Result<void>>>();
    auto ready_once = std::make_shared<std::atomic<bool>>(false);
    auto settle = [ready, ready_once](Result<void> r) {
      bool expected = false;
      if (ready_once->compare_exchange_strong(expected, true)) {
        ready->set_value(std::move(r));
      }
    };
    conn->start(
        [self = shared_from_this(), conn, parser, settle](
            const std::uint8_t* d, std::size_t n) {
          parser->feed(d, n);
          self->on_control_data(conn, *parser, settle);
        },
        [self = shared_from_this(), conn, settle](
            const boost::system::error_code&) {
          settle(make_error(errc::connect_failed, "link closed"));
          self->on_control_down(conn);
        });

    std::string req = "GET / HTTP/1.1\r\nHost: " + uri_.host + "\r\n\r\n";
    conn->send(to_bytes(req));

    auto fut = ready->get_future();
    if (fut.wait_for(std::chrono::milliseconds(options_.connect_timeout_ms)) !=
        std::future_status::ready) {
      conn->close();
      return make_error(errc::connect_failed, "zenoh REST probe timed out");
    }
    return fut.get();
  }

  void on_control_data(const std::shared_ptr<net::TcpConn>& conn,
                       HttpResponseParser& parser,
                       const std::function<void(Result<void>)>& settle) {
    while (true) {
      if (control_body_due_ > 0) {
        std::vector<std::uint8_t> body;
        if (!parser.take_body(control_body_due_, body)) return;
        control_body_due_ = 0;
        continue;
      }
      auto head = parser.next_head();
      if (!head) return;
      if (head->status >= 500) {
        settle(make_error(errc::connect_failed,
                          "zenoh REST error " + std::to_string(head->status)));
        conn->close();
        return;
      }
      settle(Result<void>{});  // first response = probe answer
      control_body_due_ = head->content_length;

      // A PUT completed; release the next queued one.
      std::vector<std::uint8_t> next;
      {
        std::lock_guard lock(mu_);
        if (puts_inflight_ > 0) --puts_inflight_;
        if (!put_queue_.empty()) {
          next = std::move(put_queue_.front());
          put_queue_.pop_front();
          ++puts_inflight_;
        }
      }
      if (!next.empty()) conn->send(std::move(next));
    }
  }

  void on_control_down(const std::shared_ptr<net::TcpConn>& conn) {
    {
      std::lock_guard lock(mu_);
      if (control_ != conn) return;
    }
    connected_.store(false);
    if (link_event_due_.exchange(false)) {
      record(ConnectionEventKind::disconnect);
    }
  }

  Result<void> open_sse(SubEntry& entry) {
    auto conn = std::make_shared<net::TcpConn>(io_.ctx());
    if (auto r = conn->connect(uri_.host, port(), options_.connect_timeout_ms);
        !r.ok()) {
      return r;
    }
    auto parser = std::make_shared<HttpResponseParser>();
    auto ready = std::make_shared<std::promise<Result<void>>>();
    auto ready_once = std::make_shared<std::atomic<bool>>(false);
    auto settle = [ready, ready_once](Result<void> r) {
      bool expected = false;
      if (ready_once->compare_exchange_strong(expected, true)) {
        ready->set_value(std::move(r));
      }
    };
    auto got_head = std::make_shared<bool>(false);
    auto sink = entry.sink;
    conn->start(
        [self = shared_from_this(), parser, settle, got_head, sink](
            const std::uint8_t* d, std::size_t n) {
          const auto recv_ts = wall_now_ns();
          parser->feed(d, n);
          if (!*got_head) {
            auto head = parser->next_head();
            if (!head) return;
            *got_head = true;
            if (head->status != 200) {
              settle(make_error(errc::connect_failed,
                                "zenoh subscribe rejected, status " +
                                    std::to_string(head->status)));
              return;
            }
            settle(Result<void>{});
          }
          while (auto ev = parser->next_event()) {
            self->dispatch_event(sink, *ev, recv_ts);
          }
        },
        [settle](const boost::system::error_code&) {
          settle(make_error(errc::connect_failed, "link closed"));
        });

    std::string req = "GET /" + entry.topic + " HTTP/1.1\r\n";
    req += "Host: " + uri_.host + "\r\n";
    req += "Accept: text/event-stream\r\n\r\n";
    conn->send(to_bytes(req));

    auto fut = ready->get_future();
    if (fut.wait_for(std::chrono::milliseconds(options_.connect_timeout_ms)) !=
        std::future_status::ready) {
      conn->close();
      return make_error(errc::connect_failed, "zenoh subscribe timed out");
    }
    if (auto r = fut.get(); !r.ok()) {
      conn->close();
      return r;
    }
    entry.conn = conn;
    return {};
  }

  void dispatch_event(const MessageSink& sink, const std::string& json_text,
                      std::uint64_t recv_ts) {
    const auto doc = nlohmann::json::parse(json_text, nullptr, false);
    if (doc.is_discarded()) return;
    const auto* obj = &doc;
    // Some router versions wrap samples in a one-element array.
    if (doc.is_array()) {
      if (doc.empty()) return;
      obj = &doc[0];
    }
    if (!obj->is_object() || !obj->contains("key") || !obj->contains("value")) {
      return;
    }
    const auto key = (*obj)["key"].get<std::string>();
    const auto value = (*obj)["value"].is_string()
                           ? (*obj)["value"].get<std::string>()
                           : (*obj)["value"].dump();
    auto payload = util::base64_decode(value);
    if (!payload) {
      // Not our wrapping; deliver the raw text bytes.
      payload.emplace(value.begin(), value.end());
    }
    sink(key, std::span<const std::uint8_t>(*payload), recv_ts);
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
  std::shared_ptr<net::TcpConn> control_;
  std::deque<std::vector<std::uint8_t>> put_queue_;
  std::size_t puts_inflight_ = 0;
  std::vector<SubEntry> subs_;
  std::uint64_t next_id_ = 1;
  std::atomic<bool> connected_{false};
  std::atomic<bool> link_event_due_{false};

  // Only touched on the control strand.
  std::size_t control_body_due_ = 0;
};

}  // namespace

Result<SessionPtr> make_zenoh_session(net::IoRuntime& io, const net::Uri& uri,
                                      TransportOptions options) {
  auto session = std::make_shared<ZenohSession>(io, uri, std::move(options));
  if (auto r = session->dial(false); !r.ok()) return r.error();
  return SessionPtr(new SharedSessionHandle(std::move(session)));
}

}  // namespace mqbench::transport::detail
