#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <string_view>

#include "mqbench/resmon/resource_sample.hpp"
#include "mqbench/result.hpp"

namespace mqbench::resmon {

/// RFC 3339 timestamp ("2026-08-14T12:00:01.5Z", offsets allowed) to
/// nanoseconds since the UNIX epoch.
Result<std::uint64_t> parse_rfc3339_ns(std::string_view ts);

/// Maps one engine stats document (Docker Engine API shape) onto a
/// ResourceSample. RSS follows the engine's own convention: usage minus
/// inactive_file where a cgroup provides it, the raw rss counter as the
/// cgroup-v1 fallback, raw usage as the last resort. Both the derived RSS
/// and the raw usage are kept.
Result<ResourceSample> parse_stats_json(std::string_view body);

/// Keep-alive client for `GET /containers/{id}/stats?stream=false` against
/// an HTTP engine endpoint such as "http://127.0.0.1:2375".
class StatsClient {
 public:
  explicit StatsClient(std::string endpoint, std::uint32_t timeout_ms = 2000);
  ~StatsClient();

  StatsClient(const StatsClient&) = delete;
  StatsClient& operator=(const StatsClient&) = delete;

  /// One sample. 404 means the container is gone (ContainerNotFound);
  /// transport failures map to EndpointUnreachable.
  Result<ResourceSample> poll(const std::string& container_id);

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// One-shot convenience around StatsClient.
Result<ResourceSample> poll_stats(const std::string& endpoint,
                                  const std::string& container_id,
                                  std::uint32_t timeout_ms = 2000);

}  // namespace mqbench::resmon
