#pragma once

#include <cstdint>
#include <memory>
#include <string>

#include "mqbench/net/io_runtime.hpp"

namespace mqbench::chaos {

/// Self-contained TCP fault proxy with a Toxiproxy-compatible admin API,
/// for benchmarking hosts where no external proxy is installed.
///
///   POST   /proxies          {"name","listen","upstream"}  create
///   GET    /proxies          list
///   GET    /proxies/{name}   inspect
///   POST   /proxies/{name}   {"enabled": bool}             sever/restore
///   DELETE /proxies/{name}   remove
///   POST   /reset            re-enable everything
///
/// Disabling a proxy resets every live connection (SO_LINGER 0, so peers
/// see RST, not FIN) and closes the listener; enabling rebinds it. Data
/// plane runs on the shared asio runtime, the admin server on one thread.
class FaultProxy {
 public:
  explicit FaultProxy(net::IoRuntime& io, std::uint16_t admin_port = 0);
  ~FaultProxy();

  FaultProxy(const FaultProxy&) = delete;
  FaultProxy& operator=(const FaultProxy&) = delete;

  std::uint16_t admin_port() const;
  std::string admin_endpoint() const;  // http://127.0.0.1:<port>

  /// Tears down all proxies and the admin server. Idempotent.
  void stop();

 private:
  struct Impl;
  std::shared_ptr<Impl> impl_;
};

}  // namespace mqbench::chaos
