#include "mqbench/chaos/fault_proxy.hpp"

#include <array>
#include <atomic>
#include <future>
#include <map>
#include <optional>
#include <mutex>
#include <set>
#include <thread>

#include <boost/asio/bind_executor.hpp>
#include <boost/asio/connect.hpp>
#include <boost/asio/ip/tcp.hpp>
#include <boost/asio/post.hpp>
#include <boost/asio/strand.hpp>
#include <boost/asio/write.hpp>
#include <nlohmann/json.hpp>

#include "httplib.h"

namespace mqbench::chaos {

namespace {

using boost::asio::ip::tcp;
using Strand = boost::asio::strand<boost::asio::io_context::executor_type>;

struct HostPort {
  std::string host;
  std::uint16_t port = 0;
};

HostPort split_host_port(const std::string& s) {
  HostPort hp;
  const auto colon = s.rfind(':');
  if (colon == std::string::npos) {
    hp.host = s;
    return hp;
  }
  hp.host = s.substr(0, colon);
  hp.port = static_cast<std::uint16_t>(std::atoi(s.c_str() + colon + 1));
  return hp;
}

class ProxyEntry;

// One bidirectional relay. Each direction has its own buffer and pump;
// each socket is written by exactly one pump, so writes never interleave.
class Pipe : public std::enable_shared_from_this<Pipe> {
 public:
  Pipe(Strand strand, tcp::socket client, tcp::socket upstream,
       std::function<void(const std::shared_ptr<Pipe>&)> on_closed)
      : strand_(std::move(strand)),
        client_(std::move(client)),
        upstream_(std::move(upstream)),
        on_closed_(std::move(on_closed)) {}

  void start() {
    pump(client_, upstream_, fwd_buf_);
    pump(upstream_, client_, rev_buf_);
  }

  // Hard kill: linger 0 makes the close an RST on both legs. Strand only.
  void reset_hard() {
    if (closed_) return;
    closed_ = true;
    boost::system::error_code ec;
    const boost::asio::socket_base::linger rst(true, 0);
    client_.set_option(rst, ec);
    upstream_.set_option(rst, ec);
    client_.close(ec);
    upstream_.close(ec);
  }

 private:
  void pump(tcp::socket& from, tcp::socket& to,
            std::array<std::uint8_t, 8192>& buf) {
    from.async_read_some(
        boost::asio::buffer(buf),
        boost::asio::bind_executor(
            strand_, [self = shared_from_this(), &from, &to, &buf](
                         const boost::system::error_code& ec, std::size_t n) {
              if (ec) {
                self->close_both();
                return;
              }
              boost::asio::async_write(
                  to, boost::asio::buffer(buf.data(), n),
                  boost::asio::bind_executor(
                      self->strand_, [self, &from, &to, &buf](
                                         const boost::system::error_code& wec,
                                         std::size_t) {
                        if (wec) {
                          self->close_both();
                          return;
                        }
                        self->pump(from, to, buf);
                      }));
            }));
  }

  void close_both() {
    if (closed_) return;
    closed_ = true;
    boost::system::error_code ec;
    client_.close(ec);
    upstream_.close(ec);
    if (on_closed_) on_closed_(shared_from_this());
  }

  Strand strand_;
  tcp::socket client_;
  tcp::socket upstream_;
  std::function<void(const std::shared_ptr<Pipe>&)> on_closed_;
  std::array<std::uint8_t, 8192> fwd_buf_{};
  std::array<std::uint8_t, 8192> rev_buf_{};
  bool closed_ = false;
};

class ProxyEntry : public std::enable_shared_from_this<ProxyEntry> {
 public:
  ProxyEntry(boost::asio::io_context& io, std::string name, HostPort listen,
             std::string upstream_str)
      : strand_(boost::asio::make_strand(io)),
        io_(io),
        name_(std::move(name)),
        listen_(std::move(listen)),
        upstream_str_(std::move(upstream_str)),
        upstream_(split_host_port(upstream_str_)) {}

  // Binds the listener; fills in the resolved port. Called off-strand
  // before the entry is published, so no synchronization needed yet.
  bool open_listener(std::string& err) {
    boost::system::error_code ec;
    acceptor_.emplace(strand_);
    const auto addr = boost::asio::ip::make_address(
        listen_.host.empty() ? "127.0.0.1" : listen_.host, ec);
    if (ec) {
      err = "bad listen host";
      return false;
    }
    acceptor_->open(tcp::v4(), ec);
    if (!ec) acceptor_->set_option(tcp::acceptor::reuse_address(true), ec);
    if (!ec) acceptor_->bind(tcp::endpoint(addr, listen_.port), ec);
    if (!ec) acceptor_->listen(boost::asio::socket_base::max_listen_connections, ec);
    if (ec) {
      err = ec.message();
      acceptor_.reset();
      return false;
    }
    listen_.port = acceptor_->local_endpoint().port();
    accept_next();
    return true;
  }

  void enable(bool on) {
    std::promise<void> done;
    boost::asio::post(strand_, [this, on, &done] {
      if (on && !enabled_) {
        enabled_ = true;
        std::string err;
        open_listener(err);  // rebind; failure leaves the proxy severed
      } else if (!on && enabled_) {
        enabled_ = false;
        boost::system::error_code ec;
        if (acceptor_) acceptor_->close(ec);
        acceptor_.reset();
        for (const auto& p : pipes_) p->reset_hard();
        pipes_.clear();
      }
      done.set_value();
    });
    done.get_future().wait();
  }

  void shutdown() { enable(false); }

  nlohmann::json to_json() const {
    return {{"name", name_},
            {"listen", listen_.host + ":" + std::to_string(listen_.port)},
            {"upstream", upstream_str_},
            {"enabled", enabled_.load()},
            {"toxics", nlohmann::json::array()}};
  }

  bool enabled() const { return enabled_.load(); }
  const std::string& name() const { return name_; }
  std::uint16_t port() const { return listen_.port; }

 private:
  void accept_next() {
    if (!acceptor_) return;
    acceptor_->async_accept(boost::asio::bind_executor(
        strand_, [self = shared_from_this()](const boost::system::error_code& ec,
                                             tcp::socket client) {
          if (ec) return;  // listener closed
          self->dial_upstream(std::move(client));
          self->accept_next();
        }));
  }

  void dial_upstream(tcp::socket client) {
    auto up = std::make_shared<tcp::socket>(strand_);
    auto resolver = std::make_shared<tcp::resolver>(strand_);
    resolver->async_resolve(
        upstream_.host, std::to_string(upstream_.port),
        boost::asio::bind_executor(
            strand_, [self = shared_from_this(), up, resolver,
                      client = std::make_shared<tcp::socket>(std::move(client))](
                         const boost::system::error_code& ec,
                         tcp::resolver::results_type results) mutable {
              if (ec || !self->enabled_) return;  // refuse by dropping
              boost::asio::async_connect(
                  *up, results,
                  boost::asio::bind_executor(
                      self->strand_, [self, up, client](
                                         const boost::system::error_code& cec,
                                         const tcp::endpoint&) {
                        if (cec || !self->enabled_) return;
                        auto pipe = std::make_shared<Pipe>(
                            self->strand_, std::move(*client), std::move(*up),
                            [self](const std::shared_ptr<Pipe>& p) {
                              self->pipes_.erase(p);
                            });
                        self->pipes_.insert(pipe);
                        pipe->start();
                      }));
            }));
  }

  Strand strand_;
  boost::asio::io_context& io_;
  std::string name_;
  HostPort listen_;
  std::string upstream_str_;
  HostPort upstream_;
  std::optional<tcp::acceptor> acceptor_;
  std::set<std::shared_ptr<Pipe>> pipes_;  // strand-confined
  std::atomic<bool> enabled_{true};
};

}  // namespace

struct FaultProxy::Impl {
  explicit Impl(net::IoRuntime& io) : io(io) {}

  net::IoRuntime& io;
  httplib::Server svr;
  std::thread admin_thread;
  std::uint16_t admin_port = 0;
  std::mutex mu;
  std::map<std::string, std::shared_ptr<ProxyEntry>> proxies;
  bool stopped = false;

  std::shared_ptr<ProxyEntry> find(const std::string& name) {
    std::lock_guard lock(mu);
    auto it = proxies.find(name);
    return it == proxies.end() ? nullptr : it->second;
  }

  void routes() {
    svr.set_keep_alive_max_count(100000);

    svr.Post("/proxies", [this](const httplib::Request& req,
                                httplib::Response& res) {
      auto doc = nlohmann::json::parse(req.body, nullptr, false);
      if (doc.is_discarded() || !doc.contains("name") ||
          !doc.contains("listen") || !doc.contains("upstream")) {
        res.status = 400;
        res.set_content(R"({"error":"name, listen, upstream required"})",
                        "application/json");
        return;
      }
      const auto name = doc["name"].get<std::string>();
      {
        std::lock_guard lock(mu);
        if (proxies.count(name)) {
          res.status = 409;
          res.set_content(R"({"error":"proxy already exists"})",
                          "application/json");
          return;
        }
      }
      auto entry = std::make_shared<ProxyEntry>(
          io.ctx(), name, split_host_port(doc["listen"].get<std::string>()),
          doc["upstream"].get<std::string>());
      std::string err;
      if (!entry->open_listener(err)) {
        res.status = 400;
        res.set_content(nlohmann::json{{"error", err}}.dump(),
                        "application/json");
        return;
      }
      {
        std::lock_guard lock(mu);
        proxies[name] = entry;
      }
      res.status = 201;
      res.set_content(entry->to_json().dump(), "application/json");
    });

    svr.Get("/proxies", [this](const httplib::Request&, httplib::Response& res) {
      nlohmann::json out = nlohmann::json::object();
      std::lock_guard lock(mu);
      for (const auto& [name, entry] : proxies) out[name] = entry->to_json();
      res.set_content(out.dump(), "application/json");
    });

    svr.Get(R"(/proxies/([^/]+))", [this](const httplib::Request& req,
                                          httplib::Response& res) {
      auto entry = find(req.matches[1]);
      if (!entry) {
        res.status = 404;
        res.set_content(R"({"error":"proxy not found"})", "application/json");
        return;
      }
      res.set_content(entry->to_json().dump(), "application/json");
    });

    svr.Post(R"(/proxies/([^/]+))", [this](const httplib::Request& req,
                                           httplib::Response& res) {
      auto entry = find(req.matches[1]);
      if (!entry) {
        res.status = 404;
        res.set_content(R"({"error":"proxy not found"})", "application/json");
        return;
      }
      auto doc = nlohmann::json::parse(req.body, nullptr, false);
      if (!doc.is_discarded() && doc.contains("enabled")) {
        entry->enable(doc["enabled"].get<bool>());
      }
      res.set_content(entry->to_json().dump(), "application/json");
    });

    svr.Delete(R"(/proxies/([^/]+))", [this](const httplib::Request& req,
                                             httplib::Response& res) {
      std::shared_ptr<ProxyEntry> entry;
      {
        std::lock_guard lock(mu);
        auto it = proxies.find(req.matches[1]);
        if (it != proxies.end()) {
          entry = it->second;
          proxies.erase(it);
        }
      }
      if (!entry) {
        res.status = 404;
        res.set_content(R"({"error":"proxy not found"})", "application/json");
        return;
      }
      entry->shutdown();
      res.status = 204;
    });

    svr.Post("/reset", [this](const httplib::Request&, httplib::Response& res) {
      std::lock_guard lock(mu);
      for (const auto& [name, entry] : proxies) entry->enable(true);
      res.set_content("{}", "application/json");
    });
  }
};

FaultProxy::FaultProxy(net::IoRuntime& io, std::uint16_t admin_port)
    : impl_(std::make_shared<Impl>(io)) {
  impl_->routes();
  if (admin_port == 0) {
    impl_->admin_port = static_cast<std::uint16_t>(
        impl_->svr.bind_to_any_port("127.0.0.1"));
  } else {
    impl_->svr.bind_to_port("127.0.0.1", admin_port);
    impl_->admin_port = admin_port;
  }
  impl_->admin_thread = std::thread([impl = impl_] {
    impl->svr.listen_after_bind();
  });
  impl_->svr.wait_until_ready();
}

FaultProxy::~FaultProxy() { stop(); }

std::uint16_t FaultProxy::admin_port() const { return impl_->admin_port; }

std::string FaultProxy::admin_endpoint() const {
  return "http://127.0.0.1:" + std::to_string(impl_->admin_port);
}

void FaultProxy::stop() {
  if (impl_->stopped) return;
  impl_->stopped = true;
  std::map<std::string, std::shared_ptr<ProxyEntry>> entries;
  {
    std::lock_guard lock(impl_->mu);
    entries.swap(impl_->proxies);
  }
  for (const auto& [name, entry] : entries) entry->shutdown();
  impl_->svr.stop();
  if (impl_->admin_thread.joinable()) impl_->admin_thread.join();
}

}  // namespace mqbench::chaos
