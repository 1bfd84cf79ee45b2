#include "mqbench/transport/transport.hpp"

#include "adapters.hpp"
#include "mqbench/net/uri.hpp"

namespace mqbench::transport {

void ConnectionLog::record(std::string client_id, ConnectionEventKind kind,
                           std::uint64_t ts_ns) {
  std::lock_guard lock(mu_);
  events_.push_back({std::move(client_id), kind, ts_ns});
}

std::vector<ConnectionEvent> ConnectionLog::snapshot() const {
  std::lock_guard lock(mu_);
  return events_;
}

std::size_t ConnectionLog::size() const {
  std::lock_guard lock(mu_);
  return events_.size();
}

void Session::publish_async(std::string_view topic,
                            std::span<const std::uint8_t> payload, QosLevel qos,
                            std::function<void(Result<void>)> done) {
  done(publish(topic, payload, qos));
}

namespace {

const char* scheme_for(TransportKind kind) {
  switch (kind) {
    case TransportKind::mqtt:
    case TransportKind::nats:
    case TransportKind::resp:
      return "tcp";
    case TransportKind::amqp:
      return "amqp";
    case TransportKind::zenoh:
      return "zenoh";
    case TransportKind::loopback:
      return "loopback";
  }
  return "";
}

}  // namespace

Result<SessionPtr> connect(net::IoRuntime& io, TransportKind kind,
                           const std::string& endpoint,
                           TransportOptions options) {
  if (options.client_id.empty()) {
    return make_error(errc::invalid_spec, "client_id must be non-empty");
  }
  auto uri = net::parse_uri(endpoint);
  if (!uri.ok()) {
    return make_error(errc::unsupported_scheme, uri.error().message);
  }
  if (uri.value().scheme != scheme_for(kind)) {
    return make_error(errc::unsupported_scheme,
                      "endpoint scheme '" + uri.value().scheme +
                          "' does not match transport '" +
                          std::string(to_string(kind)) + "' (expected '" +
                          scheme_for(kind) + "://')");
  }
  switch (kind) {
    case TransportKind::loopback:
      return detail::make_loopback_session(uri.value(), std::move(options));
    case TransportKind::mqtt:
      return detail::make_mqtt_session(io, uri.value(), std::move(options));
    case TransportKind::nats:
      return detail::make_nats_session(io, uri.value(), std::move(options));
    case TransportKind::resp:
      return detail::make_resp_session(io, uri.value(), std::move(options));
    case TransportKind::amqp:
      return detail::make_amqp_session(io, uri.value(), std::move(options));
    case TransportKind::zenoh:
      return detail::make_zenoh_session(io, uri.value(), std::move(options));
  }
  return make_error(errc::unsupported_scheme, "unknown transport kind");
}

}  // namespace mqbench::transport
