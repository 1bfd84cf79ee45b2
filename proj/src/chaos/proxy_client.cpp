#include "mqbench/chaos/proxy_client.hpp"

#include <nlohmann/json.hpp>

#include "httplib.h"

namespace mqbench::chaos {

namespace {

httplib::Client make_client(const std::string& admin, std::uint32_t timeout_ms) {
  httplib::Client cli(admin);
  cli.set_connection_timeout(std::chrono::milliseconds(timeout_ms));
  cli.set_read_timeout(std::chrono::milliseconds(timeout_ms));
  return cli;
}

Error unreachable(const httplib::Result& res) {
  return make_error(errc::admin_unreachable,
                    "proxy admin: " + httplib::to_string(res.error()));
}

Result<ProxyInfo> parse_proxy(const std::string& body) {
  auto doc = nlohmann::json::parse(body, nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) {
    return make_error(errc::io_error, "proxy admin returned non-JSON");
  }
  ProxyInfo info;
  info.name = doc.value("name", "");
  info.listen = doc.value("listen", "");
  info.upstream = doc.value("upstream", "");
  info.enabled = doc.value("enabled", true);
  return info;
}

}  // namespace

Result<ProxyInfo> create_proxy(const std::string& admin,
                               const ProxyConfig& cfg,
                               std::uint32_t timeout_ms) {
  auto cli = make_client(admin, timeout_ms);
  nlohmann::json body = {{"name", cfg.name},
                         {"listen", cfg.listen},
                         {"upstream", cfg.upstream},
                         {"enabled", true}};
  auto res = cli.Post("/proxies", body.dump(), "application/json");
  if (!res) return unreachable(res);
  if (res->status != 200 && res->status != 201) {
    return make_error(errc::bad_config,
                      "proxy create failed: HTTP " +
                          std::to_string(res->status) + " " + res->body);
  }
  return parse_proxy(res->body);
}

Result<ProxyInfo> get_proxy(const std::string& admin, const std::string& name,
                            std::uint32_t timeout_ms) {
  auto cli = make_client(admin, timeout_ms);
  auto res = cli.Get("/proxies/" + name);
  if (!res) return unreachable(res);
  if (res->status == 404) {
    return make_error(errc::proxy_not_found, "no proxy named " + name);
  }
  if (res->status != 200) {
    return make_error(errc::io_error,
                      "proxy get failed: HTTP " + std::to_string(res->status));
  }
  return parse_proxy(res->body);
}

Result<void> set_proxy_enabled(const std::string& admin,
                               const std::string& name, bool enabled,
                               std::uint32_t timeout_ms) {
  auto cli = make_client(admin, timeout_ms);
  nlohmann::json body = {{"enabled", enabled}};
  auto res = cli.Post("/proxies/" + name, body.dump(), "application/json");
  if (!res) return unreachable(res);
  if (res->status == 404) {
    return make_error(errc::proxy_not_found, "no proxy named " + name);
  }
  if (res->status != 200) {
    return make_error(errc::io_error, "proxy toggle failed: HTTP " +
                                          std::to_string(res->status));
  }
  return {};
}

Result<void> delete_proxy(const std::string& admin, const std::string& name,
                          std::uint32_t timeout_ms) {
  auto cli = make_client(admin, timeout_ms);
  auto res = cli.Delete("/proxies/" + name);
  if (!res) return unreachable(res);
  if (res->status == 404) {
    return make_error(errc::proxy_not_found, "no proxy named " + name);
  }
  if (res->status != 204 && res->status != 200) {
    return make_error(errc::io_error, "proxy delete failed: HTTP " +
                                          std::to_string(res->status));
  }
  return {};
}

}  // namespace mqbench::chaos
