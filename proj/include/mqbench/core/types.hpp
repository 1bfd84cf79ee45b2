#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mqbench/result.hpp"

namespace mqbench {

enum class Scenario {
  latency_payload,
  throughput_pairs,
  fanout,
  qos_reliability,
};

enum class TransportKind { mqtt, nats, amqp, resp, zenoh, loopback };

/// MQTT-style delivery guarantee. Non-MQTT transports accept level 0 only.
enum class QosLevel : std::uint8_t {
  at_most_once = 0,
  at_least_once = 1,
  exactly_once = 2,
};

const char* to_string(Scenario s);
const char* to_string(TransportKind k);
Result<Scenario> parse_scenario(const std::string& s);
Result<TransportKind> parse_transport_kind(const std::string& s);

/// Highest QoS level a transport kind honors. Everything except MQTT maps
/// to best-effort delivery.
QosLevel max_qos_for(TransportKind kind);

/// Full description of one benchmark run.
struct ExperimentSpec {
  Scenario scenario = Scenario::latency_payload;
  TransportKind transport_kind = TransportKind::loopback;
  std::string endpoint = "loopback://0";
  std::uint32_t pairs = 1;              // 1-to-1 topology
  std::uint32_t fanout_subscribers = 1; // fanout topology only
  double rate_per_publisher = 10.0;     // msg/s
  std::uint64_t payload_bytes = 1024;   // includes the 24-byte header
  double duration_s = 120.0;
  double warmup_s = 0.0;
  QosLevel qos = QosLevel::at_most_once;
  std::optional<double> mttf_s;
  std::optional<double> mttr_s;
  std::string topic_prefix = "bench";
  std::uint64_t rng_seed = 1;

  bool is_fanout() const { return scenario == Scenario::fanout; }
  /// pairs x rate for 1-to-1, rate for fanout ingestion.
  double offered_load_msg_s() const {
    return is_fanout() ? rate_per_publisher
                       : static_cast<double>(pairs) * rate_per_publisher;
  }
  bool operator==(const ExperimentSpec&) const = default;
};

/// One delivered message's latency record.
struct LatencySample {
  std::string topic;
  std::uint64_t seq = 0;
  std::uint64_t send_ts_ns = 0;
  std::uint64_t recv_ts_ns = 0;
  std::int64_t latency_ns = 0;  // recv - send; negative only under clock skew
  std::uint64_t payload_bytes = 0;

  bool operator==(const LatencySample&) const = default;
};

enum class ConnectionEventKind { connect, disconnect, reconnect };

const char* to_string(ConnectionEventKind k);
Result<ConnectionEventKind> parse_connection_event_kind(const std::string& s);

struct ConnectionEvent {
  std::string client_id;
  ConnectionEventKind kind = ConnectionEventKind::connect;
  std::uint64_t ts_ns = 0;

  bool operator==(const ConnectionEvent&) const = default;
};

struct LatencyStats {
  std::int64_t min_ns = 0;
  double mean_ns = 0.0;
  double stddev_ns = 0.0;  // population
  std::int64_t p50_ns = 0;
  std::int64_t p95_ns = 0;
  std::int64_t p99_ns = 0;
  std::int64_t max_ns = 0;
};

struct SeriesStats {
  double mean = 0.0;
  double max = 0.0;
};

/// Aggregated result of one run.
struct SummaryReport {
  ExperimentSpec spec;
  std::uint64_t stable_start_ns = 0;
  std::uint64_t stable_end_ns = 0;
  std::uint64_t published_count = 0;
  std::uint64_t received_count = 0;   // raw deliveries, duplicates included
  std::uint64_t duplicate_count = 0;
  double throughput_msg_s = 0.0;      // stable-period receive rate
  LatencyStats latency;
  double loss_fraction = 0.0;         // [0,1], duplicates removed
  SeriesStats cpu_cores;
  SeriesStats mem_mb;
  std::uint64_t negative_latency_count = 0;  // clock-skew samples, excluded from percentiles
  std::uint64_t malformed_count = 0;         // foreign messages seen on topics
  bool degenerate = false;
  std::vector<std::string> warnings;
};

}  // namespace mqbench
