#include <atomic>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <functional>
#include <random>
#include <thread>

#include <nlohmann/json.hpp>

#include "doctest.h"
#include "httplib.h"

#include "mqbench/resmon/monitor.hpp"
#include "mqbench/resmon/stats_client.hpp"

using namespace mqbench;
using namespace mqbench::resmon;

namespace {

std::string rfc3339(std::uint64_t ns) {
  const auto secs = static_cast<std::time_t>(ns / 1'000'000'000ull);
  std::tm tm{};
  gmtime_r(&secs, &tm);
  char date[32];
  std::strftime(date, sizeof date, "%Y-%m-%dT%H:%M:%S", &tm);
  char out[64];
  std::snprintf(out, sizeof out, "%s.%09lluZ", date,
                static_cast<unsigned long long>(ns % 1'000'000'000ull));
  return out;
}

// Engine-API-shaped stats endpoint; the handler writes one response per
// hit index.
struct StatsStub {
  explicit StatsStub(std::function<void(int, httplib::Response&)> handler) {
    svr.set_keep_alive_max_count(100000);
    svr.Get(R"(/containers/([^/]+)/stats)",
            [this, h = std::move(handler)](const httplib::Request&,
                                           httplib::Response& res) {
              h(hits.fetch_add(1), res);
            });
    port = svr.bind_to_any_port("127.0.0.1");
    th = std::thread([this] { svr.listen_after_bind(); });
    svr.wait_until_ready();
  }
  ~StatsStub() {
    svr.stop();
    th.join();
  }
  std::string endpoint() const {
    return "http://127.0.0.1:" + std::to_string(port);
  }

  httplib::Server svr;
  int port = 0;
  std::thread th;
  std::atomic<int> hits{0};
};

std::string ramp_body(int hit, std::uint64_t base_ns) {
  nlohmann::json body = {
      {"read", rfc3339(base_ns + static_cast<std::uint64_t>(hit) * 100'000'000ull)},
      {"cpu_stats",
       {{"cpu_usage",
         {{"total_usage", static_cast<std::uint64_t>(hit) * 50'000'000ull}}},
        {"online_cpus", 4}}},
      {"memory_stats",
       {{"usage", 536870912ull},
        {"stats", {{"inactive_file", 134217728ull}}}}},
  };
  return body.dump();
}

}  // namespace

TEST_CASE("rfc 3339 parsing: epoch anchors, fractions, offsets") {
  CHECK(parse_rfc3339_ns("1970-01-01T00:00:00Z").value() == 0);
  CHECK(parse_rfc3339_ns("1970-01-01T00:00:01.000000001Z").value() ==
        1'000'000'001ull);
  CHECK(parse_rfc3339_ns("1970-01-02T00:00:00Z").value() ==
        86400ull * 1'000'000'000ull);
  CHECK(parse_rfc3339_ns("1970-01-01T01:00:00+01:00").value() == 0);
  CHECK(parse_rfc3339_ns("2026-08-14T12:00:01.5Z").value() ==
        1786708801ull * 1'000'000'000ull + 500'000'000ull);

  CHECK(!parse_rfc3339_ns("yesterday").ok());
  CHECK(!parse_rfc3339_ns("2026-08-14T12:00:01").ok());  // zone required
}

TEST_CASE("rfc 3339 parsing: round-trips random nanosecond instants") {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<std::uint64_t> dist(
      0, 4'102'444'800ull * 1'000'000'000ull);  // through 2100
  for (int i = 0; i < 200; ++i) {
    const auto ns = dist(rng);
    auto parsed = parse_rfc3339_ns(rfc3339(ns));
    REQUIRE(parsed.ok());
    CHECK(parsed.value() == ns);
  }
}

TEST_CASE("stats mapping: cgroup v2 document maps field for field") {
  // Engine API v1.43 response shape, trimmed to the documented fields.
  const std::string body = R"({
    "read": "2026-08-14T12:00:01.5Z",
    "preread": "2026-08-14T12:00:00.5Z",
    "pids_stats": {"current": 23, "limit": 18446744073709551615},
    "num_procs": 0,
    "cpu_stats": {
      "cpu_usage": {"total_usage": 3300000000, "usage_in_kernelmode": 700000000, "usage_in_usermode": 2600000000},
      "system_cpu_usage": 9123456780000000,
      "online_cpus": 4,
      "throttling_data": {"periods": 0, "throttled_periods": 0, "throttled_time": 0}
    },
    "memory_stats": {
      "usage": 536870912,
      "stats": {"active_anon": 268435456, "inactive_file": 134217728, "active_file": 67108864, "anon": 268435456, "file": 201326592},
      "limit": 8589934592
    }
  })";
  auto r = parse_stats_json(body);
  REQUIRE(r.ok());
  CHECK(r.value().ts_ns == 1786708801ull * 1'000'000'000ull + 500'000'000ull);
  CHECK(r.value().cpu_total_ns == 3'300'000'000ull);
  CHECK(r.value().mem_usage_bytes == 536870912ull);
  CHECK(r.value().mem_rss_bytes == 536870912ull - 134217728ull);
  CHECK(!r.value().gap);
}

TEST_CASE("stats mapping: cgroup v1 and bare fallbacks") {
  const char* v1 = R"({"read":"1970-01-01T00:00:10Z",
    "cpu_stats":{"cpu_usage":{"total_usage":1000}},
    "memory_stats":{"usage":1000000,"stats":{"total_inactive_file":400000,"rss":123}}})";
  auto a = parse_stats_json(v1);
  REQUIRE(a.ok());
  CHECK(a.value().mem_rss_bytes == 600000);  // inactive_file wins over rss

  const char* rss_only = R"({"read":"1970-01-01T00:00:10Z",
    "cpu_stats":{"cpu_usage":{"total_usage":1000}},
    "memory_stats":{"usage":1000000,"stats":{"rss":777000}}})";
  auto b = parse_stats_json(rss_only);
  REQUIRE(b.ok());
  CHECK(b.value().mem_rss_bytes == 777000);

  const char* bare = R"({"read":"1970-01-01T00:00:10Z",
    "cpu_stats":{"cpu_usage":{"total_usage":1000}},
    "memory_stats":{"usage":555}})";
  auto c = parse_stats_json(bare);
  REQUIRE(c.ok());
  CHECK(c.value().mem_rss_bytes == 555);

  CHECK(!parse_stats_json("not json").ok());
  CHECK(!parse_stats_json(R"({"memory_stats":{"usage":1}})").ok());
}

TEST_CASE("poll_stats: 404 is a missing container, dead port unreachable") {
  StatsStub stub([](int, httplib::Response& res) {
    res.status = 404;
    res.set_content(R"({"message":"No such container"})", "application/json");
  });
  auto gone = poll_stats(stub.endpoint(), "deadbeef");
  REQUIRE(!gone.ok());
  CHECK(gone.error().code == errc::container_not_found);

  auto off = poll_stats("http://127.0.0.1:9", "x", 300);
  REQUIRE(!off.ok());
  CHECK(off.error().code == errc::endpoint_unreachable);
}

TEST_CASE("monitor: linear cpu ramp yields the closed-form mean") {
  const std::uint64_t base = 1786708800ull * 1'000'000'000ull;
  StatsStub stub([base](int hit, httplib::Response& res) {
    res.set_content(ramp_body(hit, base), "application/json");
  });

  MonitorConfig cfg;
  cfg.endpoint = stub.endpoint();
  cfg.container_id = "broker";
  cfg.interval_s = 0.1;
  Monitor mon(cfg);
  std::this_thread::sleep_for(std::chrono::milliseconds(1050));
  auto series = mon.stop();

  REQUIRE(series.size() >= 8);
  for (const auto& s : series) CHECK(!s.gap);

  // Stub timestamps advance 100 ms per poll while cpu advances 50 ms:
  // every adjacent pair works out to exactly half a core.
  auto stats = summarize_series(series);
  CHECK(stats.cpu_cores.mean == 0.5);
  CHECK(stats.cpu_cores.max == 0.5);
  CHECK(stats.mem_mb.mean == 384.0);
  CHECK(stats.mem_mb.max == 384.0);
  CHECK(stats.gap_count == 0);
  CHECK(stats.restart_count == 0);
}

TEST_CASE("monitor: fixed schedule does not drift with slow responses") {
  const std::uint64_t base = 1786708800ull * 1'000'000'000ull;
  StatsStub stub([base](int hit, httplib::Response& res) {
    std::this_thread::sleep_for(std::chrono::milliseconds(30));
    res.set_content(ramp_body(hit, base), "application/json");
  });

  MonitorConfig cfg;
  cfg.endpoint = stub.endpoint();
  cfg.container_id = "broker";
  cfg.interval_s = 0.1;
  Monitor mon(cfg);
  std::this_thread::sleep_for(std::chrono::milliseconds(1250));
  auto series = mon.stop();

  // Sleep-after-work at ~130 ms per cycle would cap out near ten samples;
  // the absolute schedule stays on the 100 ms grid.
  CHECK(series.size() >= 11);
  CHECK(series.size() <= 14);
}

TEST_CASE("monitor: a killed container turns into gap markers") {
  const std::uint64_t base = 1786708800ull * 1'000'000'000ull;
  StatsStub stub([base](int hit, httplib::Response& res) {
    if (hit >= 4) {
      res.status = 404;
      res.set_content(R"({"message":"No such container"})", "application/json");
      return;
    }
    res.set_content(ramp_body(hit, base), "application/json");
  });

  MonitorConfig cfg;
  cfg.endpoint = stub.endpoint();
  cfg.container_id = "broker";
  cfg.interval_s = 0.05;
  Monitor mon(cfg);
  std::this_thread::sleep_for(std::chrono::milliseconds(500));
  auto series = mon.stop();

  REQUIRE(series.size() >= 6);
  for (int i = 0; i < 4; ++i) {
    CHECK(!series[static_cast<std::size_t>(i)].gap);
    CHECK(series[static_cast<std::size_t>(i)].cpu_total_ns ==
          static_cast<std::uint64_t>(i) * 50'000'000ull);
  }
  std::uint64_t gaps = 0;
  for (std::size_t i = 4; i < series.size(); ++i) {
    CHECK(series[i].gap);
    ++gaps;
  }
  CHECK(gaps >= 2);
  CHECK(summarize_series(series).gap_count == gaps);
}
