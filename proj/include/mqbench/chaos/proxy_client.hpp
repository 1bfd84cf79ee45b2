#pragma once

#include <cstdint>
#include <string>

#include "mqbench/result.hpp"

namespace mqbench::chaos {

/// One TCP proxy definition on a Toxiproxy-compatible admin API.
/// listen/upstream are "host:port"; listen port 0 asks the server to pick.
struct ProxyConfig {
  std::string name;
  std::string listen;
  std::string upstream;
};

struct ProxyInfo {
  std::string name;
  std::string listen;  // resolved address, actual port filled in
  std::string upstream;
  bool enabled = true;
};

/// POST /proxies. Conflicting names are an error from the server.
Result<ProxyInfo> create_proxy(const std::string& admin,
                               const ProxyConfig& cfg,
                               std::uint32_t timeout_ms = 2000);

Result<ProxyInfo> get_proxy(const std::string& admin, const std::string& name,
                            std::uint32_t timeout_ms = 2000);

/// POST /proxies/{name} {"enabled": ...}. Disabling resets every live
/// connection through the proxy and refuses new ones; enabling reopens
/// the listener. Both directions are idempotent.
Result<void> set_proxy_enabled(const std::string& admin,
                               const std::string& name, bool enabled,
                               std::uint32_t timeout_ms = 2000);

Result<void> delete_proxy(const std::string& admin, const std::string& name,
                          std::uint32_t timeout_ms = 2000);

/// Severs the network path (connection resets + refused connects).
inline Result<void> apply_failure(const std::string& admin,
                                  const std::string& name,
                                  std::uint32_t timeout_ms = 2000) {
  return set_proxy_enabled(admin, name, false, timeout_ms);
}

/// Reopens the path.
inline Result<void> restore(const std::string& admin, const std::string& name,
                            std::uint32_t timeout_ms = 2000) {
  return set_proxy_enabled(admin, name, true, timeout_ms);
}

}  // namespace mqbench::chaos
