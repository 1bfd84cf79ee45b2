#include "mqbench/core/types.hpp"

namespace mqbench {

const char* errc_name(errc c) {
  switch (c) {
    case errc::ok: return "ok";
    case errc::malformed_header: return "MalformedHeader";
    case errc::payload_too_small: return "PayloadTooSmall";
    case errc::invalid_spec: return "InvalidSpec";
    case errc::connect_failed: return "ConnectFailed";
    case errc::unsupported_scheme: return "UnsupportedScheme";
    case errc::not_connected: return "NotConnected";
    case errc::unsupported_qos: return "UnsupportedQoS";
    case errc::publish_timeout: return "PublishTimeout";
    case errc::bind_failed: return "BindFailed";
    case errc::aborted_by_transport: return "AbortedByTransport";
    case errc::empty_sample_set: return "EmptySampleSet";
    case errc::no_events: return "NoEvents";
    case errc::unknown_topic: return "UnknownTopic";
    case errc::non_monotonic_time: return "NonMonotonicTime";
    case errc::container_not_found: return "ContainerNotFound";
    case errc::endpoint_unreachable: return "EndpointUnreachable";
    case errc::image_unavailable: return "ImageUnavailable";
    case errc::start_failed: return "StartFailed";
    case errc::readiness_timeout: return "ReadinessTimeout";
    case errc::proxy_not_found: return "ProxyNotFound";
    case errc::admin_unreachable: return "AdminUnreachable";
    case errc::io_error: return "IoError";
    case errc::bad_config: return "BadConfig";
  }
  return "unknown";
}

const char* to_string(Scenario s) {
  switch (s) {
    case Scenario::latency_payload: return "latency_payload";
    case Scenario::throughput_pairs: return "throughput_pairs";
    case Scenario::fanout: return "fanout";
    case Scenario::qos_reliability: return "qos_reliability";
  }
  return "unknown";
}

const char* to_string(TransportKind k) {
  switch (k) {
    case TransportKind::mqtt: return "mqtt";
    case TransportKind::nats: return "nats";
    case TransportKind::amqp: return "amqp";
    case TransportKind::resp: return "resp";
    case TransportKind::zenoh: return "zenoh";
    case TransportKind::loopback: return "loopback";
  }
  return "unknown";
}

const char* to_string(ConnectionEventKind k) {
  switch (k) {
    case ConnectionEventKind::connect: return "connect";
    case ConnectionEventKind::disconnect: return "disconnect";
    case ConnectionEventKind::reconnect: return "reconnect";
  }
  return "unknown";
}

Result<Scenario> parse_scenario(const std::string& s) {
  if (s == "latency_payload") return Scenario::latency_payload;
  if (s == "throughput_pairs") return Scenario::throughput_pairs;
  if (s == "fanout") return Scenario::fanout;
  if (s == "qos_reliability") return Scenario::qos_reliability;
  return make_error(errc::bad_config, "unknown scenario: " + s);
}

Result<TransportKind> parse_transport_kind(const std::string& s) {
  if (s == "mqtt") return TransportKind::mqtt;
  if (s == "nats") return TransportKind::nats;
  if (s == "amqp") return TransportKind::amqp;
  if (s == "resp") return TransportKind::resp;
  if (s == "zenoh") return TransportKind::zenoh;
  if (s == "loopback") return TransportKind::loopback;
  return make_error(errc::bad_config, "unknown transport kind: " + s);
}

Result<ConnectionEventKind> parse_connection_event_kind(const std::string& s) {
  if (s == "connect") return ConnectionEventKind::connect;
  if (s == "disconnect") return ConnectionEventKind::disconnect;
  if (s == "reconnect") return ConnectionEventKind::reconnect;
  return make_error(errc::bad_config, "unknown connection event kind: " + s);
}

QosLevel max_qos_for(TransportKind kind) {
  // AMQP publishes without confirms in this artifact, so it maps to
  // best-effort alongside nats/resp/zenoh/loopback.
  return kind == TransportKind::mqtt ? QosLevel::exactly_once
                                     : QosLevel::at_most_once;
}

}  // namespace mqbench
