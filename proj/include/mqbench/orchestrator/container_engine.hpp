#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "mqbench/result.hpp"

namespace mqbench::orchestrator {

struct PortMapping {
  std::uint16_t host = 0;
  std::uint16_t container = 0;
};

/// How to bring up the broker under test on a container engine.
/// container_ctl empty means the broker is externally managed: no
/// lifecycle calls, no resource monitor.
struct BrokerDeployment {
  std::string container_ctl;  // engine API, e.g. http://127.0.0.1:2375
  std::string image;
  std::string name = "mqbench-broker";
  std::vector<std::pair<std::string, std::string>> env;
  std::vector<PortMapping> ports;
  // Brokers holding tens of thousands of sessions exhaust the default
  // soft limit long before saturating; keep this at 2x planned sessions.
  std::uint64_t nofile_limit = 300000;
  std::string ready_host = "127.0.0.1";
  std::uint32_t ready_timeout_s = 30;

  bool managed() const { return !container_ctl.empty() && !image.empty(); }
};

/// True if the engine answers its ping route.
bool engine_available(const std::string& container_ctl,
                      std::uint32_t timeout_ms = 1500);

/// Creates and starts the container, then probes the first mapped host
/// port with a TCP connect-retry loop until the broker accepts or the
/// readiness budget runs out. A leftover container with the same name is
/// force-removed first, so restarts always get fresh broker state.
Result<std::string> start_broker(const BrokerDeployment& d);

/// Stop (10s grace) and remove. Best-effort and idempotent: failures are
/// swallowed so teardown paths can always call it.
void stop_broker(const std::string& container_ctl, const std::string& id);

/// One TCP connect attempt against host:port, for readiness probing.
bool port_connectable(const std::string& host, std::uint16_t port,
                      std::uint32_t timeout_ms = 500);

}  // namespace mqbench::orchestrator
