#include "mqbench/transport/mini_broker.hpp"

#include <boost/asio/ip/tcp.hpp>
#include <boost/asio/strand.hpp>
#include <boost/asio/write.hpp>

#include <array>
#include <deque>
#include <map>
#include <mutex>
#include <set>
#include <vector>

#include "adapters.hpp"
#include "mqbench/transport/mqtt_codec.hpp"

namespace mqbench::transport {

using boost::asio::ip::tcp;

namespace {

struct QueuedMessage {
  std::string topic;
  std::vector<std::uint8_t> payload;
  std::uint8_t qos = 0;
  bool dup = false;
};

}  // namespace

class MiniBroker::Impl : public std::enable_shared_from_this<MiniBroker::Impl> {
 public:
  explicit Impl(boost::asio::io_context& ctx)
      : ctx_(ctx), acceptor_(boost::asio::make_strand(ctx)) {}

  Result<void> bind(const std::string& host, std::uint16_t port) {
    boost::system::error_code ec;
    const auto addr = boost::asio::ip::make_address(host, ec);
    if (ec) return make_error(errc::bind_failed, "bad listen address " + host);
    const tcp::endpoint ep(addr, port);
    acceptor_.open(ep.protocol(), ec);
    if (!ec) acceptor_.set_option(tcp::acceptor::reuse_address(true), ec);
    if (!ec) acceptor_.bind(ep, ec);
    if (!ec) acceptor_.listen(boost::asio::socket_base::max_listen_connections, ec);
    if (ec) {
      return make_error(errc::bind_failed,
                        host + ":" + std::to_string(port) + ": " + ec.message());
    }
    port_ = acceptor_.local_endpoint().port();
    accept_next();
    return {};
  }

  std::uint16_t port() const { return port_; }

  void stop() {
    std::vector<std::shared_ptr<Conn>> conns;
    {
      std::lock_guard lock(mu_);
      if (stopped_) return;
      stopped_ = true;
      for (auto& [id, s] : sessions_) {
        if (s->conn) conns.push_back(s->conn);
      }
      sessions_.clear();
      for (auto& c : orphans_) conns.push_back(c);
      orphans_.clear();
    }
    boost::asio::post(acceptor_.get_executor(), [self = shared_from_this()] {
      boost::system::error_code ignored;
      self->acceptor_.close(ignored);
    });
    for (auto& c : conns) c->close();
  }

 private:
  // One accepted socket. Starts anonymous ("orphan") until CONNECT names it.
  struct Conn : std::enable_shared_from_this<Conn> {
    explicit Conn(boost::asio::io_context& ctx)
        : strand(boost::asio::make_strand(ctx)), socket(strand) {}

    boost::asio::strand<boost::asio::io_context::executor_type> strand;
    tcp::socket socket;
    std::array<std::uint8_t, 64 * 1024> rx{};
    std::deque<std::vector<std::uint8_t>> tx;
    bool writing = false;
    mqtt::FrameSplitter splitter;
    std::string client_id;  // empty until CONNECT

    void send(std::vector<std::uint8_t> frame) {
      boost::asio::post(strand, [self = shared_from_this(),
                                 frame = std::move(frame)]() mutable {
        if (!self->socket.is_open()) return;
        self->tx.push_back(std::move(frame));
        if (!self->writing) self->write_next();
      });
    }

    void write_next() {
      if (tx.empty()) {
        writing = false;
        return;
      }
      writing = true;
      boost::asio::async_write(
          socket, boost::asio::buffer(tx.front()),
          [self = shared_from_this()](const boost::system::error_code& ec,
                                      std::size_t) {
            if (ec) return;
            self->tx.pop_front();
            self->write_next();
          });
    }

    void close() {
      boost::asio::post(strand, [self = shared_from_this()] {
        boost::system::error_code ignored;
        self->socket.shutdown(tcp::socket::shutdown_both, ignored);
        self->socket.close(ignored);
      });
    }
  };

  struct BrokerSession {
    std::string client_id;
    bool clean = true;
    std::shared_ptr<Conn> conn;  // null while offline
    std::vector<std::pair<std::string, std::uint8_t>> filters;
    std::deque<QueuedMessage> offline;             // awaiting reconnect
    std::map<std::uint16_t, QueuedMessage> inflight;  // qos1 sent, no PUBACK yet
    std::uint16_t next_pid = 0;

    std::uint16_t alloc_pid() {
      do {
        next_pid = next_pid == 0xFFFF ? 1 : next_pid + 1;
      } while (inflight.count(next_pid));
      return next_pid;
    }
  };

  void accept_next() {
    auto conn = std::make_shared<Conn>(ctx_);
    acceptor_.async_accept(
        conn->socket, [self = shared_from_this(), conn](
                          const boost::system::error_code& ec) {
          if (ec) return;  // acceptor closed
          {
            std::lock_guard lock(self->mu_);
            self->orphans_.insert(conn);
          }
          boost::system::error_code opt_ec;
          conn->socket.set_option(tcp::no_delay(true), opt_ec);
          self->read_loop(conn);
          self->accept_next();
        });
  }

  void read_loop(const std::shared_ptr<Conn>& conn) {
    conn->socket.async_read_some(
        boost::asio::buffer(conn->rx),
        [self = shared_from_this(), conn](const boost::system::error_code& ec,
                                          std::size_t n) {
          if (ec) {
            self->on_conn_gone(conn);
            return;
          }
          conn->splitter.feed(conn->rx.data(), n);
          while (auto p = conn->splitter.next()) self->handle(conn, *p);
          if (conn->splitter.corrupt()) {
            conn->close();
            self->on_conn_gone(conn);
            return;
          }
          self->read_loop(conn);
        });
  }

  void handle(const std::shared_ptr<Conn>& conn, const mqtt::Packet& p) {
    using mqtt::PacketType;
    switch (p.type) {
      case PacketType::connect:
        handle_connect(conn, p);
        break;
      case PacketType::subscribe:
        handle_subscribe(conn, p);
        break;
      case PacketType::publish:
        handle_publish(conn, p);
        break;
      case PacketType::puback:
        handle_puback(conn, p);
        break;
      case PacketType::pingreq:
        conn->send(mqtt::encode_simple(PacketType::pingresp));
        break;
      case PacketType::disconnect:
        handle_disconnect(conn);
        break;
      default:
        // qos2 flow and the rest of the protocol are out of scope for the
        // fixture; drop the offender.
        conn->close();
        break;
    }
  }

  void handle_connect(const std::shared_ptr<Conn>& conn,
                      const mqtt::Packet& p) {
    auto fields = mqtt::decode_connect(p);
    if (!fields.ok() || fields.value().client_id.empty()) {
      conn->close();
      return;
    }
    const auto& f = fields.value();

    std::shared_ptr<Conn> evicted;
    bool session_present = false;
    {
      std::lock_guard lock(mu_);
      orphans_.erase(conn);
      conn->client_id = f.client_id;

      auto it = sessions_.find(f.client_id);
      if (it != sessions_.end() && it->second->conn) {
        evicted = it->second->conn;  // client id takeover
        it->second->conn.reset();
      }
      if (f.clean_session) {
        sessions_.erase(f.client_id);
        it = sessions_.end();
      } else if (it != sessions_.end()) {
        session_present = true;
      }
      if (it == sessions_.end()) {
        auto s = std::make_shared<BrokerSession>();
        s->client_id = f.client_id;
        it = sessions_.emplace(f.client_id, std::move(s)).first;
      }
      it->second->clean = f.clean_session;
      it->second->conn = conn;
    }
    if (evicted) evicted->close();

    conn->send(mqtt::encode_connack({session_present, 0}));
    flush_session(f.client_id);
  }

  // Redelivers inflight (dup) then queued messages after a reconnect.
  void flush_session(const std::string& client_id) {
    std::shared_ptr<Conn> conn;
    std::vector<std::pair<std::uint16_t, QueuedMessage>> to_send;
    {
      std::lock_guard lock(mu_);
      auto it = sessions_.find(client_id);
      if (it == sessions_.end() || !it->second->conn) return;
      auto& s = *it->second;
      conn = s.conn;

      std::vector<QueuedMessage> redeliver;
      for (auto& [pid, m] : s.inflight) {
        auto copy = m;
        copy.dup = true;
        redeliver.push_back(std::move(copy));
      }
      s.inflight.clear();
      for (auto& m : redeliver) {
        to_send.emplace_back(m.qos > 0 ? s.alloc_pid() : 0, std::move(m));
        if (to_send.back().second.qos > 0) {
          s.inflight[to_send.back().first] = to_send.back().second;
        }
      }
      while (!s.offline.empty()) {
        auto m = std::move(s.offline.front());
        s.offline.pop_front();
        const auto pid = m.qos > 0 ? s.alloc_pid() : std::uint16_t{0};
        if (m.qos > 0) s.inflight[pid] = m;
        to_send.emplace_back(pid, std::move(m));
      }
    }
    for (auto& [pid, m] : to_send) {
      mqtt::PublishFields out;
      out.topic = m.topic;
      out.payload = m.payload;
      out.qos = m.qos;
      out.dup = m.dup;
      out.packet_id = pid;
      conn->send(mqtt::encode_publish(out));
    }
  }

  void handle_subscribe(const std::shared_ptr<Conn>& conn,
                        const mqtt::Packet& p) {
    auto sub = mqtt::decode_subscribe(p);
    if (!sub.ok() || conn->client_id.empty()) {
      conn->close();
      return;
    }
    std::vector<std::uint8_t> granted;
    {
      std::lock_guard lock(mu_);
      auto it = sessions_.find(conn->client_id);
      if (it == sessions_.end()) return;
      for (const auto& [filter, qos] : sub.value().topics) {
        const std::uint8_t g = std::min<std::uint8_t>(qos, 1);
        it->second->filters.emplace_back(filter, g);
        granted.push_back(g);
      }
    }
    conn->send(mqtt::encode_suback(sub.value().packet_id, granted));
  }

  void handle_publish(const std::shared_ptr<Conn>& conn,
                      const mqtt::Packet& p) {
    auto pub = mqtt::decode_publish(p);
    if (!pub.ok() || pub.value().qos > 1) {
      conn->close();
      return;
    }
    const auto& f = pub.value();
    if (f.qos == 1) {
      conn->send(mqtt::encode_ack(mqtt::PacketType::puback, f.packet_id));
    }
    route(f);
  }

  void route(const mqtt::PublishFields& f) {
    std::vector<std::pair<std::shared_ptr<Conn>, std::vector<std::uint8_t>>> out;
    {
      std::lock_guard lock(mu_);
      for (auto& [id, s] : sessions_) {
        std::uint8_t best = 0;
        bool matched = false;
        for (const auto& [filter, qos] : s->filters) {
          if (detail::topic_matches(filter, f.topic)) {
            matched = true;
            best = std::max(best, qos);
          }
        }
        if (!matched) continue;
        const std::uint8_t eff = std::min(best, f.qos);

        QueuedMessage m{f.topic, f.payload, eff, false};
        if (!s->conn) {
          if (!s->clean) s->offline.push_back(std::move(m));
          continue;
        }
        mqtt::PublishFields fwd;
        fwd.topic = m.topic;
        fwd.payload = m.payload;
        fwd.qos = eff;
        if (eff > 0) {
          fwd.packet_id = s->alloc_pid();
          s->inflight[fwd.packet_id] = m;
        }
        out.emplace_back(s->conn, mqtt::encode_publish(fwd));
      }
    }
    for (auto& [c, frame] : out) c->send(std::move(frame));
  }

  void handle_puback(const std::shared_ptr<Conn>& conn,
                     const mqtt::Packet& p) {
    auto pid = mqtt::decode_packet_id(p);
    if (!pid.ok()) return;
    std::lock_guard lock(mu_);
    auto it = sessions_.find(conn->client_id);
    if (it != sessions_.end()) it->second->inflight.erase(pid.value());
  }

  void handle_disconnect(const std::shared_ptr<Conn>& conn) {
    conn->close();
    on_conn_gone(conn);
  }

  void on_conn_gone(const std::shared_ptr<Conn>& conn) {
    std::lock_guard lock(mu_);
    orphans_.erase(conn);
    if (conn->client_id.empty()) return;
    auto it = sessions_.find(conn->client_id);
    if (it == sessions_.end() || it->second->conn != conn) return;
    auto& s = *it->second;
    s.conn.reset();
    if (s.clean) {
      sessions_.erase(it);
      return;
    }
    // Unacked qos1 deliveries go back to the queue for redelivery.
    for (auto& [pid, m] : s.inflight) {
      auto copy = m;
      copy.dup = true;
      s.offline.push_front(std::move(copy));
    }
    s.inflight.clear();
  }

  boost::asio::io_context& ctx_;
  tcp::acceptor acceptor_;
  std::uint16_t port_ = 0;

  std::mutex mu_;
  bool stopped_ = false;
  std::map<std::string, std::shared_ptr<BrokerSession>> sessions_;
  std::set<std::shared_ptr<Conn>> orphans_;
};

MiniBroker::MiniBroker() = default;

MiniBroker::~MiniBroker() {
  if (impl_) impl_->stop();
}

Result<std::unique_ptr<MiniBroker>> MiniBroker::serve(net::IoRuntime& io,
                                                      const std::string& host,
                                                      std::uint16_t port) {
  auto broker = std::unique_ptr<MiniBroker>(new MiniBroker());
  broker->impl_ = std::make_shared<Impl>(io.ctx());
  if (auto r = broker->impl_->bind(host, port); !r.ok()) return r.error();
  return broker;
}

std::uint16_t MiniBroker::port() const { return impl_->port(); }

void MiniBroker::stop() { impl_->stop(); }

}  // namespace mqbench::transport
