#include "mqbench/net/io_runtime.hpp"

#include <algorithm>

namespace mqbench::net {

IoRuntime::IoRuntime(unsigned threads)
    : guard_(boost::asio::make_work_guard(ctx_)) {
  if (threads == 0) {
    threads = std::max(2u, std::thread::hardware_concurrency());
  }
  pool_.reserve(threads);
  for (unsigned i = 0; i < threads; ++i) {
    pool_.emplace_back([this] { ctx_.run(); });
  }
}

IoRuntime::~IoRuntime() { stop(); }

void IoRuntime::stop() {
  guard_.reset();
  ctx_.stop();
  for (auto& t : pool_) {
    if (t.joinable()) t.join();
  }
  pool_.clear();
}

}  // namespace mqbench::net
