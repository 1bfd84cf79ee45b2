#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mqbench/core/types.hpp"
#include "mqbench/net/io_runtime.hpp"
#include "mqbench/result.hpp"

namespace mqbench::transport {

// Thread-safe connection event sink shared by every session in a run.
// The stable-period detector consumes a snapshot after the run ends.
class ConnectionLog {
 public:
  void record(std::string client_id, ConnectionEventKind kind,
              std::uint64_t ts_ns);
  std::vector<ConnectionEvent> snapshot() const;
  std::size_t size() const;

 private:
  mutable std::mutex mu_;
  std::vector<ConnectionEvent> events_;
};

struct Credentials {
  std::string username;
  std::string password;
};

struct TransportOptions {
  std::string client_id;
  bool clean_session = true;
  std::uint32_t connect_timeout_ms = 5000;
  std::optional<Credentials> credentials;
  std::shared_ptr<ConnectionLog> events;  // optional; shared across sessions
};

// Delivery callback: topic, payload bytes, local receive time (UNIX ns),
// captured as early as the adapter allows.
using MessageSink = std::function<void(
    std::string_view topic, std::span<const std::uint8_t> payload,
    std::uint64_t recv_ts_ns)>;

struct Subscription {
  std::uint64_t id = 0;
  std::string topic;
};

// One protocol connection serving one logical client. Sessions move
// between threads but are never used concurrently; adapters multiplex
// their I/O on the shared IoRuntime rather than owning threads.
class Session {
 public:
  virtual ~Session() = default;

  virtual Result<void> publish(std::string_view topic,
                               std::span<const std::uint8_t> payload,
                               QosLevel qos) = 0;

  // Non-blocking variant for open-loop load generation: `done` fires once
  // the publish completes (for qos >= 1, after the protocol ack) and may run
  // on an I/O thread. The default forwards to the blocking publish().
  virtual void publish_async(std::string_view topic,
                             std::span<const std::uint8_t> payload,
                             QosLevel qos,
                             std::function<void(Result<void>)> done);

  virtual Result<Subscription> subscribe(std::string_view topic, QosLevel qos,
                                         MessageSink sink) = 0;

  // Idempotent; emits a disconnect event the first time it closes a live
  // connection.
  virtual void disconnect() = 0;

  // Re-dials the original endpoint with the original client_id and restores
  // subscriptions (protocol permitting). Used by the fault executor after a
  // proxy restore.
  virtual Result<void> reconnect() = 0;

  virtual bool connected() const = 0;
  virtual TransportKind kind() const = 0;
  virtual const std::string& client_id() const = 0;
};

using SessionPtr = std::unique_ptr<Session>;

// Dials `endpoint` with the adapter for `kind`. Blocks up to
// connect_timeout_ms. The endpoint scheme must match the transport kind:
// tcp:// for mqtt/nats/resp, amqp://, zenoh://, loopback://.
Result<SessionPtr> connect(net::IoRuntime& io, TransportKind kind,
                           const std::string& endpoint,
                           TransportOptions options);

}  // namespace mqbench::transport
