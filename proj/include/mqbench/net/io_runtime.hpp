#pragma once

#include <boost/asio/executor_work_guard.hpp>
#include <boost/asio/io_context.hpp>

#include <thread>
#include <vector>

namespace mqbench::net {

// Shared asio event loop pool. All transport adapters multiplex their
// sessions onto these threads; nothing in the framework spawns a thread
// per connection.
class IoRuntime {
 public:
  // threads == 0 picks max(2, hardware_concurrency).
  explicit IoRuntime(unsigned threads = 0);
  ~IoRuntime();

  IoRuntime(const IoRuntime&) = delete;
  IoRuntime& operator=(const IoRuntime&) = delete;

  boost::asio::io_context& ctx() { return ctx_; }

  // Stops the loop and joins the pool. Safe to call more than once.
  void stop();

 private:
  boost::asio::io_context ctx_;
  boost::asio::executor_work_guard<boost::asio::io_context::executor_type> guard_;
  std::vector<std::thread> pool_;
};

}  // namespace mqbench::net
