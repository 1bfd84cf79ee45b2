#pragma once

#include <cstdint>
#include <memory>
#include <string>

#include "mqbench/net/io_runtime.hpp"
#include "mqbench/result.hpp"

namespace mqbench::transport {

// Minimal MQTT 3.1.1 broker: CONNECT/CONNACK, SUBSCRIBE/SUBACK, PUBLISH at
// qos 0 and 1 with PUBACK, persistent sessions (offline buffering and
// inflight redelivery for clean_session=false), PING, DISCONNECT, exact
// topic matching plus trailing '#'. A hermetic test fixture, not a product.
class MiniBroker {
 public:
  // port 0 binds an ephemeral port; read it back with port().
  static Result<std::unique_ptr<MiniBroker>> serve(net::IoRuntime& io,
                                                   const std::string& host,
                                                   std::uint16_t port);
  ~MiniBroker();

  MiniBroker(const MiniBroker&) = delete;
  MiniBroker& operator=(const MiniBroker&) = delete;

  std::uint16_t port() const;
  void stop();

 private:
  MiniBroker();
  class Impl;
  std::shared_ptr<Impl> impl_;
};

}  // namespace mqbench::transport
