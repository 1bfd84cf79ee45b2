#include "mqbench/orchestrator/container_engine.hpp"

#include <chrono>
#include <thread>

#include <boost/asio/connect.hpp>
#include <boost/asio/io_context.hpp>
#include <boost/asio/ip/tcp.hpp>
#include <nlohmann/json.hpp>

#include "httplib.h"

namespace mqbench::orchestrator {

namespace {

httplib::Client make_client(const std::string& endpoint, std::uint32_t timeout_ms) {
  httplib::Client cli(endpoint);
  cli.set_connection_timeout(0, timeout_ms * 1000);
  cli.set_read_timeout(timeout_ms / 1000, (timeout_ms % 1000) * 1000);
  return cli;
}

nlohmann::json create_body(const BrokerDeployment& d) {
  nlohmann::json env = nlohmann::json::array();
  for (const auto& [k, v] : d.env) env.push_back(k + "=" + v);

  nlohmann::json exposed = nlohmann::json::object();
  nlohmann::json bindings = nlohmann::json::object();
  for (const auto& p : d.ports) {
    const auto key = std::to_string(p.container) + "/tcp";
    exposed[key] = nlohmann::json::object();
    bindings[key] = nlohmann::json::array(
        {{{"HostIp", "0.0.0.0"}, {"HostPort", std::to_string(p.host)}}});
  }

  return {{"Image", d.image},
          {"Env", env},
          {"ExposedPorts", exposed},
          {"HostConfig",
           {{"PortBindings", bindings},
            {"Ulimits",
             nlohmann::json::array(
                 {{{"Name", "nofile"},
                   {"Soft", d.nofile_limit},
                   {"Hard", d.nofile_limit}}})}}}};
}

}  // namespace

bool engine_available(const std::string& container_ctl, std::uint32_t timeout_ms) {
  if (container_ctl.empty()) return false;
  auto cli = make_client(container_ctl, timeout_ms);
  auto res = cli.Get("/_ping");
  return res && res->status == 200;
}

bool port_connectable(const std::string& host, std::uint16_t port,
                      std::uint32_t timeout_ms) {
  boost::asio::io_context ctx;
  boost::asio::ip::tcp::socket sock(ctx);
  boost::system::error_code ec;
  const auto addr = boost::asio::ip::make_address(host, ec);
  if (ec) return false;
  bool ok = false;
  sock.async_connect({addr, port},
                     [&ok](const boost::system::error_code& e) { ok = !e; });
  ctx.run_for(std::chrono::milliseconds(timeout_ms));
  return ok;
}

Result<std::string> start_broker(const BrokerDeployment& d) {
  if (!d.managed()) {
    return make_error(errc::bad_config, "deployment has no engine or image");
  }
  if (d.ports.empty()) {
    return make_error(errc::bad_config, "deployment maps no broker port");
  }
  auto cli = make_client(d.container_ctl, 5000);

  // Per-iteration isolation: a same-named leftover means stale state.
  cli.Delete("/containers/" + d.name + "?force=true&v=true");

  auto created = cli.Post("/containers/create?name=" + d.name,
                          create_body(d).dump(), "application/json");
  if (!created) {
    return make_error(errc::endpoint_unreachable,
                      "container engine unreachable: " +
                          httplib::to_string(created.error()));
  }
  if (created->status == 404) {
    return make_error(errc::image_unavailable, "no such image: " + d.image);
  }
  if (created->status != 201) {
    return make_error(errc::start_failed, "create failed: HTTP " +
                                              std::to_string(created->status) +
                                              " " + created->body);
  }
  auto doc = nlohmann::json::parse(created->body, nullptr, false);
  if (doc.is_discarded() || !doc.contains("Id")) {
    return make_error(errc::start_failed, "create returned no container id");
  }
  const std::string id = doc["Id"].get<std::string>();

  auto started = cli.Post("/containers/" + id + "/start", "", "application/json");
  if (!started || (started->status != 204 && started->status != 200)) {
    stop_broker(d.container_ctl, id);
    return make_error(errc::start_failed,
                      "start failed: HTTP " +
                          (started ? std::to_string(started->status) : "none"));
  }

  const auto deadline = std::chrono::steady_clock::now() +
                        std::chrono::seconds(d.ready_timeout_s);
  while (std::chrono::steady_clock::now() < deadline) {
    if (port_connectable(d.ready_host, d.ports.front().host, 250)) return id;
    std::this_thread::sleep_for(std::chrono::milliseconds(100));
  }
  stop_broker(d.container_ctl, id);
  return make_error(errc::readiness_timeout,
                    "broker never accepted on " + d.ready_host + ":" +
                        std::to_string(d.ports.front().host));
}

void stop_broker(const std::string& container_ctl, const std::string& id) {
  if (container_ctl.empty() || id.empty()) return;
  auto cli = make_client(container_ctl, 15000);
  cli.Post("/containers/" + id + "/stop?t=10", "", "application/json");
  cli.Delete("/containers/" + id + "?force=true&v=true");
}

}  // namespace mqbench::orchestrator
