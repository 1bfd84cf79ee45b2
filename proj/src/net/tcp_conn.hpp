#pragma once

#include <boost/asio/io_context.hpp>
#include <boost/asio/ip/tcp.hpp>
#include <boost/asio/steady_timer.hpp>
#include <boost/asio/strand.hpp>

#include <array>
#include <atomic>
#include <cstdint>
#include <deque>
#include <functional>
#include <memory>
#include <vector>

#include "mqbench/result.hpp"

namespace mqbench::net {

// Async TCP connection with a strand-serialized read loop and write queue.
// Protocol state machines run inside on_data and are race-free as long as
// they touch their state only from the strand.
class TcpConn : public std::enable_shared_from_this<TcpConn> {
 public:
  using Strand = boost::asio::strand<boost::asio::io_context::executor_type>;
  using DataFn = std::function<void(const std::uint8_t* data, std::size_t n)>;
  using CloseFn = std::function<void(const boost::system::error_code& ec)>;

  explicit TcpConn(boost::asio::io_context& ctx);

  // Blocking resolve + connect with a deadline. Must not be called from an
  // IoRuntime thread.
  Result<void> connect(const std::string& host, std::uint16_t port,
                       std::uint32_t timeout_ms);

  // Installs callbacks and starts the read loop. on_close fires at most once,
  // for both peer-initiated and local close.
  void start(DataFn on_data, CloseFn on_close);

  // Thread-safe. Frames are written in submission order.
  void send(std::vector<std::uint8_t> frame);

  // Thread-safe, idempotent.
  void close();

  bool open() const { return open_.load(std::memory_order_acquire); }
  Strand& strand() { return strand_; }

 private:
  void read_more();
  void write_next();
  void handle_close(const boost::system::error_code& ec);

  Strand strand_;
  boost::asio::ip::tcp::socket socket_;
  std::array<std::uint8_t, 64 * 1024> rx_{};
  std::deque<std::vector<std::uint8_t>> tx_;
  bool writing_ = false;
  bool close_reported_ = false;
  std::atomic<bool> open_{false};
  DataFn on_data_;
  CloseFn on_close_;
};

}  // namespace mqbench::net
