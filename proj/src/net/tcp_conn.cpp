#include "tcp_conn.hpp"

#include <boost/asio/connect.hpp>
#include <boost/asio/post.hpp>
#include <boost/asio/read.hpp>
#include <boost/asio/write.hpp>

#include <future>

namespace mqbench::net {

using boost::asio::ip::tcp;

TcpConn::TcpConn(boost::asio::io_context& ctx)
    : strand_(boost::asio::make_strand(ctx)), socket_(strand_) {}

Result<void> TcpConn::connect(const std::string& host, std::uint16_t port,
                              std::uint32_t timeout_ms) {
  boost::system::error_code ec;
  tcp::resolver resolver(strand_);
  const auto endpoints = resolver.resolve(host, std::to_string(port), ec);
  if (ec) {
    return make_error(errc::connect_failed,
                      "resolve " + host + ": " + ec.message());
  }

  auto done = std::make_shared<std::promise<boost::system::error_code>>();
  auto fut = done->get_future();
  auto timer = std::make_shared<boost::asio::steady_timer>(strand_);
  auto self = shared_from_this();

  boost::asio::async_connect(
      socket_, endpoints,
      [self, done, timer](const boost::system::error_code& e, const tcp::endpoint&) {
        timer->cancel();
        done->set_value(e);
      });
  timer->expires_after(std::chrono::milliseconds(timeout_ms));
  timer->async_wait([self](const boost::system::error_code& e) {
    if (!e) {
      boost::system::error_code ignored;
      self->socket_.cancel(ignored);
    }
  });

  const auto connect_ec = fut.get();
  if (connect_ec) {
    boost::system::error_code ignored;
    socket_.close(ignored);
    const bool timed_out = connect_ec == boost::asio::error::operation_aborted;
    return make_error(errc::connect_failed,
                      host + ":" + std::to_string(port) + ": " +
                          (timed_out ? "connect timed out" : connect_ec.message()));
  }
  socket_.set_option(tcp::no_delay(true), ec);
  open_.store(true, std::memory_order_release);
  return {};
}

void TcpConn::start(DataFn on_data, CloseFn on_close) {
  on_data_ = std::move(on_data);
  on_close_ = std::move(on_close);
  boost::asio::post(strand_, [self = shared_from_this()] { self->read_more(); });
}

void TcpConn::read_more() {
  socket_.async_read_some(
      boost::asio::buffer(rx_),
      [self = shared_from_this()](const boost::system::error_code& ec,
                                  std::size_t n) {
        if (ec) {
          self->handle_close(ec);
          return;
        }
        if (self->on_data_) self->on_data_(self->rx_.data(), n);
        self->read_more();
      });
}

void TcpConn::send(std::vector<std::uint8_t> frame) {
  boost::asio::post(strand_, [self = shared_from_this(),
                              frame = std::move(frame)]() mutable {
    if (!self->open_.load(std::memory_order_acquire)) return;
    self->tx_.push_back(std::move(frame));
    if (!self->writing_) self->write_next();
  });
}

void TcpConn::write_next() {
  if (tx_.empty()) {
    writing_ = false;
    return;
  }
  writing_ = true;
  boost::asio::async_write(
      socket_, boost::asio::buffer(tx_.front()),
      [self = shared_from_this()](const boost::system::error_code& ec,
                                  std::size_t) {
        if (self->close_reported_) {
          // The connection died under this write (reader saw the error
          // first). The queue was left intact so the buffer stayed valid;
          // release it now.
          self->writing_ = false;
          self->tx_.clear();
          return;
        }
        if (ec) {
          self->writing_ = false;
          self->tx_.clear();
          self->handle_close(ec);
          return;
        }
        self->tx_.pop_front();
        self->write_next();
      });
}

void TcpConn::close() {
  boost::asio::post(strand_, [self = shared_from_this()] {
    if (!self->open_.load(std::memory_order_acquire)) return;
    boost::system::error_code ignored;
    self->socket_.shutdown(tcp::socket::shutdown_both, ignored);
    self->socket_.close(ignored);
    self->handle_close(boost::asio::error::operation_aborted);
  });
}

void TcpConn::handle_close(const boost::system::error_code& ec) {
  open_.store(false, std::memory_order_release);
  if (close_reported_) return;
  close_reported_ = true;
  boost::system::error_code ignored;
  socket_.close(ignored);
  // An in-flight write still references tx_.front(); its completion does
  // the cleanup in that case.
  if (!writing_) tx_.clear();
  if (on_close_) on_close_(ec);
}

}  // namespace mqbench::net
