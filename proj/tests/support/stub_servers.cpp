#include "stub_servers.hpp"

#include <algorithm>
#include <atomic>
#include <condition_variable>
#include <deque>
#include <map>
#include <optional>
#include <sstream>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "mqbench/transport/amqp_codec.hpp"

namespace mqbench::testsupport {

namespace asio = boost::asio;
using asio::ip::tcp;

void StubConn::write(const std::string& bytes) {
  std::lock_guard lock(write_mu);
  boost::system::error_code ec;
  asio::write(sock, asio::buffer(bytes), ec);
}

void StubConn::write(const std::vector<std::uint8_t>& bytes) {
  std::lock_guard lock(write_mu);
  boost::system::error_code ec;
  asio::write(sock, asio::buffer(bytes), ec);
}

void StubConn::shutdown() {
  boost::system::error_code ignored;
  sock.shutdown(tcp::socket::shutdown_both, ignored);
  sock.close(ignored);
}

StubServer::StubServer(ConnHandler handler)
    : acceptor_(ctx_, tcp::endpoint(asio::ip::make_address("127.0.0.1"), 0)),
      handler_(std::move(handler)) {
  port_ = acceptor_.local_endpoint().port();
  accept_thread_ = std::thread([this] { accept_loop(); });
}

StubServer::~StubServer() { stop(); }

void StubServer::accept_loop() {
  for (;;) {
    auto conn = std::make_shared<StubConn>(ctx_);
    boost::system::error_code ec;
    acceptor_.accept(conn->sock, ec);
    std::lock_guard lock(mu_);
    if (ec || stopped_) {
      if (!ec) conn->shutdown();
      return;
    }
    conns_.push_back(conn);
    workers_.emplace_back([this, conn] { handler_(conn); });
  }
}

void StubServer::stop() {
  std::vector<StubConnPtr> conns;
  std::vector<std::thread> workers;
  {
    std::lock_guard lock(mu_);
    if (stopped_) return;
    stopped_ = true;
    conns.swap(conns_);
    workers.swap(workers_);
  }
  {
    // A blocked synchronous accept ignores close(); wake it with a
    // throwaway connection, then let the loop observe the stop flag.
    asio::io_context tmp;
    tcp::socket dummy(tmp);
    boost::system::error_code ec;
    dummy.connect(tcp::endpoint(asio::ip::make_address("127.0.0.1"), port_),
                  ec);
  }
  if (accept_thread_.joinable()) accept_thread_.join();
  boost::system::error_code ignored;
  acceptor_.close(ignored);
  for (auto& c : conns) c->shutdown();
  for (auto& w : workers) {
    if (w.joinable()) w.join();
  }
}

bool BlockingReader::fill() {
  char chunk[4096];
  boost::system::error_code ec;
  const auto n = c_.sock.read_some(asio::buffer(chunk), ec);
  if (ec) return false;
  buf_.append(chunk, n);
  return true;
}

bool BlockingReader::read_line(std::string& line) {
  for (;;) {
    if (const auto pos = buf_.find('\n'); pos != std::string::npos) {
      line = buf_.substr(0, pos);
      buf_.erase(0, pos + 1);
      if (!line.empty() && line.back() == '\r') line.pop_back();
      return true;
    }
    if (!fill()) return false;
  }
}

bool BlockingReader::read_exact(std::size_t n, std::vector<std::uint8_t>& out) {
  while (buf_.size() < n) {
    if (!fill()) return false;
  }
  out.assign(buf_.begin(), buf_.begin() + static_cast<std::ptrdiff_t>(n));
  buf_.erase(0, n);
  return true;
}

bool BlockingReader::read_available(std::vector<std::uint8_t>& out) {
  if (buf_.empty() && !fill()) return false;
  out.assign(buf_.begin(), buf_.end());
  buf_.clear();
  return true;
}

// ---------------------------------------------------------------- NATS --

NatsStub::NatsStub() : server_([this](StubConnPtr c) { serve(std::move(c)); }) {}

int NatsStub::sub_count() const {
  std::lock_guard lock(mu_);
  return static_cast<int>(subs_.size());
}

void NatsStub::serve(StubConnPtr conn) {
  conn->write("INFO {\"server_id\":\"stub\",\"max_payload\":1048576}\r\n");
  BlockingReader r(*conn);
  std::string line;
  while (r.read_line(line)) {
    if (line.rfind("CONNECT", 0) == 0) continue;
    if (line == "PING") {
      conn->write("PONG\r\n");
      continue;
    }
    if (line.rfind("SUB ", 0) == 0) {
      std::istringstream in(line.substr(4));
      std::string subject, sid;
      in >> subject >> sid;
      std::lock_guard lock(mu_);
      subs_.push_back({conn, subject, sid});
      continue;
    }
    if (line.rfind("PUB ", 0) == 0) {
      std::istringstream in(line.substr(4));
      std::string subject;
      std::size_t n = 0;
      in >> subject >> n;
      std::vector<std::uint8_t> payload;
      if (!r.read_exact(n + 2, payload)) return;  // payload + CRLF
      payload.resize(n);
      route(subject, payload);
      continue;
    }
  }
}

void NatsStub::route(const std::string& subject,
                     const std::vector<std::uint8_t>& payload) {
  std::vector<Sub> hit;
  {
    std::lock_guard lock(mu_);
    for (const auto& s : subs_) {
      if (s.subject == subject) hit.push_back(s);
    }
  }
  for (const auto& s : hit) {
    std::string head = "MSG " + subject + " " + s.sid + " " +
                       std::to_string(payload.size()) + "\r\n";
    std::string frame = head;
    frame.append(payload.begin(), payload.end());
    frame += "\r\n";
    s.conn->write(frame);
  }
}

// ---------------------------------------------------------------- RESP --

namespace {

std::string resp_bulk(const std::string& s) {
  return "$" + std::to_string(s.size()) + "\r\n" + s + "\r\n";
}

}  // namespace

RespStub::RespStub() : server_([this](StubConnPtr c) { serve(std::move(c)); }) {}

int RespStub::sub_count() const {
  std::lock_guard lock(mu_);
  return static_cast<int>(subs_.size());
}

int RespStub::auth_count() const {
  std::lock_guard lock(mu_);
  return auths_;
}

void RespStub::serve(StubConnPtr conn) {
  BlockingReader r(*conn);
  std::string line;
  int chan_count = 0;
  for (;;) {
    if (!r.read_line(line) || line.empty() || line[0] != '*') return;
    const int n = std::atoi(line.c_str() + 1);
    std::vector<std::string> items;
    for (int i = 0; i < n; ++i) {
      if (!r.read_line(line) || line.empty() || line[0] != '$') return;
      const auto len = static_cast<std::size_t>(std::atoll(line.c_str() + 1));
      std::vector<std::uint8_t> bytes;
      if (!r.read_exact(len + 2, bytes)) return;
      items.emplace_back(bytes.begin(), bytes.begin() + static_cast<std::ptrdiff_t>(len));
    }
    if (items.empty()) continue;
    auto cmd = items[0];
    std::transform(cmd.begin(), cmd.end(), cmd.begin(),
                   [](unsigned char c) { return std::toupper(c); });
    if (cmd == "AUTH") {
      {
        std::lock_guard lock(mu_);
        ++auths_;
      }
      conn->write("+OK\r\n");
    } else if (cmd == "PING") {
      conn->write("+PONG\r\n");
    } else if (cmd == "SUBSCRIBE") {
      for (std::size_t i = 1; i < items.size(); ++i) {
        {
          std::lock_guard lock(mu_);
          subs_.push_back({conn, items[i]});
        }
        ++chan_count;
        conn->write("*3\r\n" + resp_bulk("subscribe") + resp_bulk(items[i]) +
                    ":" + std::to_string(chan_count) + "\r\n");
      }
    } else if (cmd == "PUBLISH" && items.size() >= 3) {
      const std::vector<std::uint8_t> payload(items[2].begin(), items[2].end());
      const int receivers = route(items[1], payload);
      conn->write(":" + std::to_string(receivers) + "\r\n");
    } else {
      conn->write("-ERR unknown command\r\n");
    }
  }
}

int RespStub::route(const std::string& channel,
                    const std::vector<std::uint8_t>& payload) {
  std::vector<Sub> hit;
  {
    std::lock_guard lock(mu_);
    for (const auto& s : subs_) {
      if (s.channel == channel) hit.push_back(s);
    }
  }
  const std::string text(payload.begin(), payload.end());
  for (const auto& s : hit) {
    s.conn->write("*3\r\n" + resp_bulk("message") + resp_bulk(channel) +
                  resp_bulk(text));
  }
  return static_cast<int>(hit.size());
}

// ---------------------------------------------------------------- AMQP --

namespace amqp = mqbench::transport::amqp;

AmqpStub::AmqpStub() : server_([this](StubConnPtr c) { serve(std::move(c)); }) {}

int AmqpStub::consumer_count() const {
  std::lock_guard lock(mu_);
  int n = 0;
  for (const auto& [name, q] : queues_) {
    if (!q.consumer_tag.empty()) ++n;
  }
  return n;
}

void AmqpStub::serve(StubConnPtr conn) {
  BlockingReader r(*conn);
  std::vector<std::uint8_t> bytes;
  if (!r.read_exact(8, bytes)) return;  // AMQP protocol header

  {
    amqp::Writer args;
    args.u8(0);
    args.u8(9);
    args.empty_table();
    args.longstr("PLAIN");
    args.longstr("en_US");
    conn->write(amqp::method_frame(0, amqp::kClassConnection, 10,
                                   std::move(args)));
  }

  amqp::FrameParser parser;
  auto next_frame = [&]() -> std::optional<amqp::Frame> {
    for (;;) {
      if (auto f = parser.next()) return f;
      if (parser.corrupt()) return std::nullopt;
      std::vector<std::uint8_t> chunk;
      if (!r.read_available(chunk)) return std::nullopt;
      parser.feed(chunk.data(), chunk.size());
    }
  };

  std::string pub_key;
  std::uint64_t body_expected = 0;
  bool body_pending = false;
  std::vector<std::uint8_t> body;
  std::vector<std::string> my_queues;

  while (auto f = next_frame()) {
    if (f->type == 2) {  // content header
      amqp::Reader rd(f->payload);
      std::uint16_t cls = 0, weight = 0;
      std::uint64_t size = 0;
      if (rd.u16(cls) && rd.u16(weight) && rd.u64(size)) {
        body_expected = size;
        body.clear();
        body_pending = true;
        if (size == 0) {
          route(pub_key, body);
          body_pending = false;  // the empty body frame must not re-route
        }
      }
      continue;
    }
    if (f->type == 3) {  // body
      if (!body_pending) continue;
      body.insert(body.end(), f->payload.begin(), f->payload.end());
      if (body.size() >= body_expected) {
        route(pub_key, body);
        body_pending = false;
      }
      continue;
    }
    if (f->type != 1) continue;

    amqp::Reader rd(f->payload);
    std::uint16_t cls = 0, mth = 0;
    if (!rd.u16(cls) || !rd.u16(mth)) return;

    if (cls == amqp::kClassConnection && mth == 11) {  // start-ok
      amqp::Writer args;
      args.u16(0);
      args.u32(131072);
      args.u16(0);
      conn->write(amqp::method_frame(0, amqp::kClassConnection, 30,
                                     std::move(args)));
    } else if (cls == amqp::kClassConnection && mth == 31) {  // tune-ok
      // open follows; nothing to send yet
    } else if (cls == amqp::kClassConnection && mth == 40) {  // open
      amqp::Writer args;
      args.shortstr("");
      conn->write(amqp::method_frame(0, amqp::kClassConnection, 41,
                                     std::move(args)));
    } else if (cls == amqp::kClassConnection && mth == 50) {  // close
      amqp::Writer args;
      conn->write(amqp::method_frame(0, amqp::kClassConnection, 51,
                                     std::move(args)));
      break;
    } else if (cls == amqp::kClassChannel && mth == 10) {  // channel.open
      amqp::Writer args;
      args.longstr("");
      conn->write(amqp::method_frame(f->channel, amqp::kClassChannel, 11,
                                     std::move(args)));
    } else if (cls == amqp::kClassExchange && mth == 10) {
      amqp::Writer args;
      conn->write(amqp::method_frame(f->channel, amqp::kClassExchange, 11,
                                     std::move(args)));
    } else if (cls == amqp::kClassQueue && mth == 10) {  // queue.declare
      std::string name;
      {
        std::lock_guard lock(mu_);
        name = "srvq-" + std::to_string(++queue_seq_);
        queues_[name] = {conn, ""};
      }
      my_queues.push_back(name);
      amqp::Writer args;
      args.shortstr(name);
      args.u32(0);
      args.u32(0);
      conn->write(amqp::method_frame(f->channel, amqp::kClassQueue, 11,
                                     std::move(args)));
    } else if (cls == amqp::kClassQueue && mth == 20) {  // queue.bind
      std::uint16_t ticket = 0;
      std::string queue, exchange, key;
      if (rd.u16(ticket) && rd.shortstr(queue) && rd.shortstr(exchange) &&
          rd.shortstr(key)) {
        std::lock_guard lock(mu_);
        bindings_.emplace_back(key, queue);
      }
      amqp::Writer args;
      conn->write(amqp::method_frame(f->channel, amqp::kClassQueue, 21,
                                     std::move(args)));
    } else if (cls == amqp::kClassBasic && mth == 20) {  // basic.consume
      std::uint16_t ticket = 0;
      std::string queue;
      std::string tag;
      if (rd.u16(ticket) && rd.shortstr(queue)) {
        std::lock_guard lock(mu_);
        tag = "ctag-" + queue;
        if (auto it = queues_.find(queue); it != queues_.end()) {
          it->second.consumer_tag = tag;
        }
      }
      amqp::Writer args;
      args.shortstr(tag);
      conn->write(amqp::method_frame(f->channel, amqp::kClassBasic, 21,
                                     std::move(args)));
    } else if (cls == amqp::kClassBasic && mth == 40) {  // basic.publish
      std::uint16_t ticket = 0;
      std::string exchange;
      if (rd.u16(ticket) && rd.shortstr(exchange)) rd.shortstr(pub_key);
    }
  }

  std::lock_guard lock(mu_);
  for (const auto& q : my_queues) queues_.erase(q);  // exclusive auto-delete
}

void AmqpStub::route(const std::string& key,
                     const std::vector<std::uint8_t>& body) {
  struct Target {
    StubConnPtr conn;
    std::string tag;
  };
  std::vector<Target> targets;
  std::uint64_t dtag = 0;
  {
    std::lock_guard lock(mu_);
    dtag = ++delivery_seq_;
    for (const auto& [bkey, queue] : bindings_) {
      if (bkey != key) continue;
      auto it = queues_.find(queue);
      if (it == queues_.end() || it->second.consumer_tag.empty()) continue;
      targets.push_back({it->second.conn, it->second.consumer_tag});
    }
  }
  for (const auto& t : targets) {
    amqp::Writer deliver;
    deliver.shortstr(t.tag);
    deliver.u64(dtag);
    deliver.u8(0);
    deliver.shortstr("mqbench.direct");
    deliver.shortstr(key);
    auto bytes = amqp::method_frame(1, amqp::kClassBasic, 60,
                                    std::move(deliver));

    amqp::Writer header;
    header.u16(amqp::kClassBasic);
    header.u16(0);
    header.u64(body.size());
    header.u16(0);
    const auto header_frame = amqp::encode_frame(2, 1, header.take());
    bytes.insert(bytes.end(), header_frame.begin(), header_frame.end());

    const auto body_frame = amqp::encode_frame(3, 1, body);
    bytes.insert(bytes.end(), body_frame.begin(), body_frame.end());
    t.conn->write(bytes);
  }
}

// --------------------------------------------------------------- Zenoh --

class ZenohRestStub::Impl {
 public:
  Impl() {
    svr_.set_keep_alive_max_count(1000000);
    svr_.new_task_queue = [] { return new httplib::ThreadPool(16); };

    svr_.Get("/", [](const httplib::Request&, httplib::Response& res) {
      res.set_content("{}", "application/json");
    });

    svr_.Get(R"(/(.+))", [this](const httplib::Request& req,
                                httplib::Response& res) {
      if (req.get_header_value("Accept").find("text/event-stream") ==
          std::string::npos) {
        res.set_content("{}", "application/json");
        return;
      }
      auto q = std::make_shared<EventQueue>();
      {
        std::lock_guard lock(mu_);
        subs_.push_back({req.matches[1].str(), q});
        ++sub_count_;
      }
      res.set_chunked_content_provider(
          "text/event-stream",
          [q](std::size_t, httplib::DataSink& sink) {
            auto item = q->pop_for(std::chrono::milliseconds(50));
            if (q->stopped() || !sink.is_writable()) return false;
            if (item && !item->empty()) {
              sink.write(item->data(), item->size());
            }
            return true;
          });
    });

    svr_.Put(R"(/(.+))", [this](const httplib::Request& req,
                                httplib::Response& res) {
      const auto key = req.matches[1].str();
      nlohmann::json event;
      event["key"] = key;
      event["value"] = req.body;  // already base64 text from the client
      const std::string frame = "data: " + event.dump() + "\n\n";
      {
        std::lock_guard lock(mu_);
        ++put_count_;
        for (auto& s : subs_) {
          if (s.key == key) s.queue->push(frame);
        }
      }
      res.set_content("", "text/plain");
    });

    port_ = static_cast<std::uint16_t>(svr_.bind_to_any_port("127.0.0.1"));
    listen_thread_ = std::thread([this] { svr_.listen_after_bind(); });
    svr_.wait_until_ready();
  }

  ~Impl() { stop(); }

  void stop() {
    bool expected = false;
    if (!stopping_.compare_exchange_strong(expected, true)) return;
    {
      std::lock_guard lock(mu_);
      for (auto& s : subs_) s.queue->stop();
    }
    svr_.stop();
    if (listen_thread_.joinable()) listen_thread_.join();
  }

  std::uint16_t port() const { return port_; }

  int sub_count() const {
    std::lock_guard lock(mu_);
    return sub_count_;
  }

  int put_count() const {
    std::lock_guard lock(mu_);
    return put_count_;
  }

 private:
  class EventQueue {
   public:
    void push(std::string s) {
      {
        std::lock_guard lock(mu_);
        items_.push_back(std::move(s));
      }
      cv_.notify_one();
    }

    std::optional<std::string> pop_for(std::chrono::milliseconds wait) {
      std::unique_lock lock(mu_);
      cv_.wait_for(lock, wait, [this] { return stopped_ || !items_.empty(); });
      if (items_.empty()) return std::nullopt;
      auto s = std::move(items_.front());
      items_.pop_front();
      return s;
    }

    void stop() {
      {
        std::lock_guard lock(mu_);
        stopped_ = true;
      }
      cv_.notify_all();
    }

    bool stopped() const {
      std::lock_guard lock(mu_);
      return stopped_;
    }

   private:
    mutable std::mutex mu_;
    std::condition_variable cv_;
    std::deque<std::string> items_;
    bool stopped_ = false;
  };

  struct SseSub {
    std::string key;
    std::shared_ptr<EventQueue> queue;
  };

  httplib::Server svr_;
  std::thread listen_thread_;
  std::uint16_t port_ = 0;
  std::atomic<bool> stopping_{false};
  mutable std::mutex mu_;
  std::vector<SseSub> subs_;
  int sub_count_ = 0;
  int put_count_ = 0;
};

ZenohRestStub::ZenohRestStub() : impl_(std::make_unique<Impl>()) {
  port_ = impl_->port();
}

ZenohRestStub::~ZenohRestStub() = default;

int ZenohRestStub::sub_count() const { return impl_->sub_count(); }

int ZenohRestStub::put_count() const { return impl_->put_count(); }

void ZenohRestStub::stop() { impl_->stop(); }

}  // namespace mqbench::testsupport
