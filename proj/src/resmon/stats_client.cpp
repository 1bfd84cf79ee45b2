#include "mqbench/resmon/stats_client.hpp"

#include <cstdio>
#include <ctime>

#include <nlohmann/json.hpp>

#include "httplib.h"
#include "mqbench/clock.hpp"

namespace mqbench::resmon {

Result<std::uint64_t> parse_rfc3339_ns(std::string_view ts) {
  int y = 0, mo = 0, d = 0, h = 0, mi = 0, s = 0, used = 0;
  const std::string str(ts);
  if (std::sscanf(str.c_str(), "%4d-%2d-%2dT%2d:%2d:%2d%n", &y, &mo, &d, &h,
                  &mi, &s, &used) != 6) {
    return make_error(errc::bad_config, "unparseable timestamp: " + str);
  }
  std::size_t at = static_cast<std::size_t>(used);

  std::uint64_t frac_ns = 0;
  if (at < str.size() && str[at] == '.') {
    ++at;
    std::uint64_t scale = 100'000'000ull;
    while (at < str.size() && str[at] >= '0' && str[at] <= '9') {
      frac_ns += scale * static_cast<std::uint64_t>(str[at] - '0');
      scale /= 10;
      ++at;
    }
  }

  std::int64_t offset_s = 0;
  if (at >= str.size()) {
    return make_error(errc::bad_config, "timestamp missing zone: " + str);
  }
  if (str[at] == '+' || str[at] == '-') {
    int oh = 0, om = 0;
    if (std::sscanf(str.c_str() + at + 1, "%2d:%2d", &oh, &om) != 2) {
      return make_error(errc::bad_config, "bad zone offset: " + str);
    }
    offset_s = (str[at] == '-' ? -1 : 1) * (oh * 3600 + om * 60);
  } else if (str[at] != 'Z' && str[at] != 'z') {
    return make_error(errc::bad_config, "bad zone: " + str);
  }

  std::tm tm{};
  tm.tm_year = y - 1900;
  tm.tm_mon = mo - 1;
  tm.tm_mday = d;
  tm.tm_hour = h;
  tm.tm_min = mi;
  tm.tm_sec = s;
  const std::int64_t secs =
      static_cast<std::int64_t>(timegm(&tm)) - offset_s;
  if (secs < 0) {
    return make_error(errc::bad_config, "pre-epoch timestamp: " + str);
  }
  return static_cast<std::uint64_t>(secs) * 1'000'000'000ull + frac_ns;
}

Result<ResourceSample> parse_stats_json(std::string_view body) {
  nlohmann::json doc = nlohmann::json::parse(body, nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) {
    return make_error(errc::io_error, "stats response is not JSON");
  }

  ResourceSample sample;
  sample.ts_ns = wall_now_ns();
  if (auto it = doc.find("read"); it != doc.end() && it->is_string()) {
    if (auto ts = parse_rfc3339_ns(it->get<std::string>()); ts.ok()) {
      sample.ts_ns = ts.value();
    }
  }

  const auto& cpu = doc.value("cpu_stats", nlohmann::json::object());
  const auto& usage = cpu.value("cpu_usage", nlohmann::json::object());
  if (!usage.contains("total_usage")) {
    return make_error(errc::io_error, "stats response lacks cpu totals");
  }
  sample.cpu_total_ns = usage["total_usage"].get<std::uint64_t>();

  const auto& mem = doc.value("memory_stats", nlohmann::json::object());
  const std::uint64_t raw = mem.value("usage", std::uint64_t{0});
  sample.mem_usage_bytes = raw;
  const auto& detail = mem.value("stats", nlohmann::json::object());
  if (detail.contains("inactive_file")) {
    const auto inactive = detail["inactive_file"].get<std::uint64_t>();
    sample.mem_rss_bytes = raw > inactive ? raw - inactive : 0;
  } else if (detail.contains("total_inactive_file")) {
    const auto inactive = detail["total_inactive_file"].get<std::uint64_t>();
    sample.mem_rss_bytes = raw > inactive ? raw - inactive : 0;
  } else if (detail.contains("rss")) {
    sample.mem_rss_bytes = detail["rss"].get<std::uint64_t>();
  } else {
    sample.mem_rss_bytes = raw;
  }
  return sample;
}

struct StatsClient::Impl {
  explicit Impl(const std::string& endpoint, std::uint32_t timeout_ms)
      : cli(endpoint) {
    cli.set_connection_timeout(std::chrono::milliseconds(timeout_ms));
    cli.set_read_timeout(std::chrono::milliseconds(timeout_ms));
    cli.set_keep_alive(true);
  }
  httplib::Client cli;
};

StatsClient::StatsClient(std::string endpoint, std::uint32_t timeout_ms)
    : impl_(std::make_unique<Impl>(endpoint, timeout_ms)) {}

StatsClient::~StatsClient() = default;

Result<ResourceSample> StatsClient::poll(const std::string& container_id) {
  auto res = impl_->cli.Get("/containers/" + container_id +
                            "/stats?stream=false");
  if (!res) {
    return make_error(errc::endpoint_unreachable,
                      "stats endpoint: " + httplib::to_string(res.error()));
  }
  if (res->status == 404) {
    return make_error(errc::container_not_found,
                      "no such container: " + container_id);
  }
  if (res->status != 200) {
    return make_error(errc::io_error,
                      "stats call failed: HTTP " + std::to_string(res->status));
  }
  return parse_stats_json(res->body);
}

Result<ResourceSample> poll_stats(const std::string& endpoint,
                                  const std::string& container_id,
                                  std::uint32_t timeout_ms) {
  StatsClient client(endpoint, timeout_ms);
  return client.poll(container_id);
}

}  // namespace mqbench::resmon
