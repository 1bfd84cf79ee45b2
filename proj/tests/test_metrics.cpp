#include <algorithm>
#include <cmath>
#include <random>

#include "doctest.h"
#include "mqbench/metrics/accounting.hpp"
#include "mqbench/metrics/percentiles.hpp"
#include "mqbench/metrics/stable_period.hpp"
#include "mqbench/metrics/summarize.hpp"
#include "mqbench/resmon/resource_sample.hpp"

using namespace mqbench;
using namespace mqbench::metrics;

namespace {

// Independent oracle: smallest value v in the set such that at least
// ceil(q/100 * N) elements are <= v. Counts directly, no sorting shared
// with the implementation path.
std::int64_t counting_percentile_oracle(const std::vector<std::int64_t>& samples,
                                        double q) {
  const auto n = samples.size();
  auto need = static_cast<std::size_t>(std::ceil(q / 100.0 * static_cast<double>(n)));
  if (need < 1) need = 1;
  std::int64_t best = 0;
  bool found = false;
  for (auto candidate : samples) {
    std::size_t le = 0;
    for (auto x : samples) {
      if (x <= candidate) ++le;
    }
    if (le >= need && (!found || candidate < best)) {
      best = candidate;
      found = true;
    }
  }
  return best;
}

std::vector<ConnectionEvent> connects(std::uint32_t n, std::uint64_t first_ns,
                                      std::uint64_t spacing_ns) {
  std::vector<ConnectionEvent> events;
  for (std::uint32_t i = 0; i < n; ++i) {
    events.push_back({"c" + std::to_string(i), ConnectionEventKind::connect,
                      first_ns + i * spacing_ns});
  }
  return events;
}

}  // namespace

TEST_CASE("nearest-rank percentiles on the worked example") {
  std::vector<std::int64_t> s = {10, 20, 30, 40, 50, 60, 70, 80, 90, 100};
  std::vector<double> qs = {50, 95};
  auto r = percentiles(s, qs);
  REQUIRE(r.ok());
  CHECK(r.value()[0] == 50);
  CHECK(r.value()[1] == 100);
}

TEST_CASE("single sample answers every rank") {
  std::vector<std::int64_t> s = {7};
  for (double q : {0.0, 1.0, 50.0, 99.0, 100.0}) {
    auto r = percentiles(s, std::vector<double>{q});
    REQUIRE(r.ok());
    CHECK(r.value()[0] == 7);
  }
}

TEST_CASE("empty sample set is an error") {
  auto r = percentiles({}, std::vector<double>{50});
  REQUIRE(!r.ok());
  CHECK(r.error().code == errc::empty_sample_set);
  CHECK(!latency_stats({}).ok());
}

TEST_CASE("percentiles match the counting oracle on random sets") {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 60; ++trial) {
    const std::size_t n = 1 + rng() % 300;
    std::vector<std::int64_t> s(n);
    for (auto& v : s) v = static_cast<std::int64_t>(rng() % 100000);
    for (double q : {1.0, 25.0, 50.0, 90.0, 95.0, 99.0, 100.0}) {
      auto got = percentiles(s, std::vector<double>{q});
      REQUIRE(got.ok());
      REQUIRE(got.value()[0] == counting_percentile_oracle(s, q));
    }
  }
}

TEST_CASE("percentiles are permutation invariant and meet boundary identities") {
  std::mt19937_64 rng(7);
  std::vector<std::int64_t> s(257);
  for (auto& v : s) v = static_cast<std::int64_t>(rng() % 10000);
  std::vector<double> qs = {0.001, 50, 100};
  auto before = percentiles(s, qs);
  auto shuffled = s;
  std::shuffle(shuffled.begin(), shuffled.end(), rng);
  auto after = percentiles(shuffled, qs);
  REQUIRE(before.ok());
  REQUIRE(after.ok());
  CHECK(before.value() == after.value());
  CHECK(before.value()[0] == *std::min_element(s.begin(), s.end()));
  CHECK(before.value()[2] == *std::max_element(s.begin(), s.end()));
}

TEST_CASE("latency_stats computes population stddev") {
  std::vector<std::int64_t> s = {2, 4, 4, 4, 5, 5, 7, 9};
  auto r = latency_stats(s);
  REQUIRE(r.ok());
  CHECK(r.value().mean_ns == doctest::Approx(5.0));
  CHECK(r.value().stddev_ns == doctest::Approx(2.0));
  CHECK(r.value().min_ns == 2);
  CHECK(r.value().max_ns == 9);
}

TEST_CASE("stable period: all clients connect") {
  // 100 connects finishing at t = 12 s, run [0, 132] s.
  auto events = connects(100, 1'000'000'000ull, 111'111'111ull);
  events.back().ts_ns = 12'000'000'000ull;
  std::sort(events.begin(), events.end(),
            [](const auto& a, const auto& b) { return a.ts_ns < b.ts_ns; });
  auto r = detect_stable_period(events, 100, 0, 132'000'000'000ull, 10.0);
  REQUIRE(r.ok());
  CHECK(r.value().detection_mode == StableDetectionMode::all_connected);
  CHECK(r.value().start_ns == 12'000'000'000ull);
  CHECK(r.value().end_ns == 132'000'000'000ull);
  CHECK(r.value().connected_at_start == 100);
  CHECK(r.value().warning.empty());
}

TEST_CASE("stable period: saturation plateau") {
  // Target 1000 never reached: 950 connects, the last at t = 30 s, then
  // silence. Window 10 s, run ends at 132 s.
  auto events = connects(950, 100'000'000ull, 31'000'000ull);
  events.back().ts_ns = 30'000'000'000ull;
  auto r = detect_stable_period(events, 1000, 0, 132'000'000'000ull, 10.0);
  REQUIRE(r.ok());
  CHECK(r.value().detection_mode == StableDetectionMode::saturation_plateau);
  CHECK(r.value().start_ns == 30'000'000'000ull);
  CHECK(r.value().end_ns == 132'000'000'000ull);
  CHECK(r.value().connected_at_start == 950);
  CHECK(r.value().warning.empty());
}

TEST_CASE("stable period: no plateau falls back to the final window") {
  // Connects keep arriving every second until run end.
  auto events = connects(40, 0, 1'000'000'000ull);
  auto r = detect_stable_period(events, 100, 0, 40'000'000'000ull, 10.0);
  REQUIRE(r.ok());
  CHECK(r.value().detection_mode == StableDetectionMode::saturation_plateau);
  CHECK(r.value().start_ns == 30'000'000'000ull);
  CHECK(!r.value().warning.empty());
}

TEST_CASE("stable period never extends outside the run") {
  auto events = connects(5, 3'000'000'000ull, 1'000'000'000ull);
  auto r = detect_stable_period(events, 50, 2'000'000'000ull, 9'000'000'000ull, 10.0);
  REQUIRE(r.ok());
  CHECK(r.value().start_ns >= events.front().ts_ns);
  CHECK(r.value().end_ns == 9'000'000'000ull);
}

TEST_CASE("stable period with no events is an error") {
  auto r = detect_stable_period({}, 10, 0, 1000, 10.0);
  REQUIRE(!r.ok());
  CHECK(r.error().code == errc::no_events);
}

TEST_CASE("reconnects count toward the connected total") {
  std::vector<ConnectionEvent> events = {
      {"a", ConnectionEventKind::connect, 100},
      {"b", ConnectionEventKind::connect, 200},
      {"a", ConnectionEventKind::disconnect, 300},
      {"a", ConnectionEventKind::reconnect, 400},
      {"c", ConnectionEventKind::connect, 500},
  };
  auto r = detect_stable_period(events, 3, 0, 1000, 10.0);
  REQUIRE(r.ok());
  CHECK(r.value().start_ns == 500);
}

TEST_CASE("throughput over a stable period") {
  StablePeriod period;
  period.start_ns = 0;
  period.end_ns = 180'000'000'000ull;
  std::vector<LatencySample> samples;
  samples.reserve(18000);
  for (int i = 0; i < 18000; ++i) {
    LatencySample s;
    s.topic = "t";
    s.seq = static_cast<std::uint64_t>(i);
    s.recv_ts_ns = static_cast<std::uint64_t>(i) * 10'000'000ull;
    samples.push_back(s);
  }
  CHECK(compute_throughput(samples, period) == doctest::Approx(100.0).epsilon(0.001));

  SUBCASE("samples before the period do not count") {
    StablePeriod late;
    late.start_ns = 200'000'000'000ull;
    late.end_ns = 210'000'000'000ull;
    CHECK(compute_throughput(samples, late) == 0.0);
  }
}

TEST_CASE("loss accounting") {
  SUBCASE("published vs unique received inside the reported band") {
    std::map<std::string, std::uint64_t> published{{"t", 18000}};
    std::vector<LatencySample> samples;
    for (int i = 0; i < 16830; ++i) {
      LatencySample s;
      s.topic = "t";
      s.seq = static_cast<std::uint64_t>(i);
      samples.push_back(s);
    }
    auto r = compute_loss(published, samples);
    REQUIRE(r.ok());
    CHECK(r.value().loss_fraction == doctest::Approx(0.065));
    CHECK(r.value().duplicate_count == 0);
  }
  SUBCASE("lossless run") {
    std::map<std::string, std::uint64_t> published{{"a", 10}, {"b", 10}};
    std::vector<LatencySample> samples;
    for (int i = 0; i < 10; ++i) {
      samples.push_back({"a", static_cast<std::uint64_t>(i), 0, 0, 0, 0});
      samples.push_back({"b", static_cast<std::uint64_t>(i), 0, 0, 0, 0});
    }
    auto r = compute_loss(published, samples);
    REQUIRE(r.ok());
    CHECK(r.value().loss_fraction == 0.0);
    CHECK(r.value().duplicate_count == 0);
  }
  SUBCASE("redelivery duplicates do not change loss") {
    std::map<std::string, std::uint64_t> published{{"t", 10}};
    std::vector<LatencySample> samples;
    for (int i = 0; i < 10; ++i) {
      samples.push_back({"t", static_cast<std::uint64_t>(i), 0, 0, 0, 0});
    }
    samples.push_back({"t", 5, 0, 0, 0, 0});  // second copy of seq 5
    auto r = compute_loss(published, samples);
    REQUIRE(r.ok());
    CHECK(r.value().loss_fraction == 0.0);
    CHECK(r.value().duplicate_count == 1);
  }
  SUBCASE("unknown topic") {
    std::map<std::string, std::uint64_t> published{{"t", 1}};
    std::vector<LatencySample> samples = {{"other", 0, 0, 0, 0, 0}};
    auto r = compute_loss(published, samples);
    REQUIRE(!r.ok());
    CHECK(r.error().code == errc::unknown_topic);
  }
}

TEST_CASE("summarize assembles a report from a synthetic run") {
  RunData run;
  run.spec.scenario = Scenario::latency_payload;
  run.spec.transport_kind = TransportKind::loopback;
  run.spec.pairs = 1;
  run.spec.rate_per_publisher = 100;
  run.spec.duration_s = 10;
  run.spec.warmup_s = 1;
  run.run_start_ns = 1'000'000'000'000ull;
  run.run_end_ns = run.run_start_ns + 11'000'000'000ull;
  run.target_clients = 2;
  run.events = {
      {"sub", ConnectionEventKind::connect, run.run_start_ns + 1000},
      {"pub", ConnectionEventKind::connect, run.run_start_ns + 2000},
  };
  // Warmup second carries absurd latencies that must not reach percentiles.
  std::uint64_t published = 0;
  for (int i = 0; i < 1100; ++i) {
    LatencySample s;
    s.topic = "bench/0";
    s.seq = published++;
    s.send_ts_ns = run.run_start_ns + static_cast<std::uint64_t>(i) * 10'000'000ull;
    const bool warmup = i < 100;
    s.latency_ns = warmup ? 5'000'000'000ll : (1000 + (i % 10));
    s.recv_ts_ns = s.send_ts_ns + static_cast<std::uint64_t>(s.latency_ns);
    s.payload_bytes = 1024;
    run.samples.push_back(s);
  }
  run.published_per_topic["bench/0"] = published;

  auto report = summarize(run);
  CHECK(!report.degenerate);
  CHECK(report.published_count == 1100);
  CHECK(report.received_count == 1100);
  CHECK(report.loss_fraction == 0.0);
  CHECK(report.latency.max_ns < 1'000'000);  // warmup latencies excluded
  CHECK(report.latency.min_ns == 1000);
  CHECK(report.throughput_msg_s == doctest::Approx(100.0).epsilon(0.05));
}

TEST_CASE("summarize flags a degenerate run instead of failing") {
  RunData run;
  run.spec.pairs = 1;
  run.run_start_ns = 0;
  run.run_end_ns = 1'000'000'000ull;
  run.published_per_topic["bench/0"] = 100;
  auto report = summarize(run);
  CHECK(report.degenerate);
  CHECK(report.throughput_msg_s == 0.0);
  CHECK(report.loss_fraction == 1.0);
  CHECK(!report.warnings.empty());
}

TEST_CASE("summarize counts negative-latency samples separately") {
  RunData run;
  run.spec.pairs = 1;
  run.run_start_ns = 0;
  run.run_end_ns = 10'000'000'000ull;
  run.target_clients = 1;
  run.events = {{"sub", ConnectionEventKind::connect, 10}};
  for (int i = 0; i < 100; ++i) {
    LatencySample s;
    s.topic = "t";
    s.seq = static_cast<std::uint64_t>(i);
    s.send_ts_ns = 1'000'000'000ull + static_cast<std::uint64_t>(i) * 1000;
    s.latency_ns = i == 0 ? -50 : 2000;
    s.recv_ts_ns = static_cast<std::uint64_t>(
        static_cast<std::int64_t>(s.send_ts_ns) + s.latency_ns);
    run.samples.push_back(s);
  }
  run.published_per_topic["t"] = 100;
  auto report = summarize(run);
  CHECK(report.negative_latency_count == 1);
  CHECK(report.latency.min_ns == 2000);
  CHECK(!report.degenerate);
}

TEST_CASE("cpu cores arithmetic") {
  resmon::ResourceSample prev{1'000'000'000ull, 0, 0, 0, false};
  SUBCASE("half a core") {
    resmon::ResourceSample curr{2'000'000'000ull, 500'000'000ull, 0, 0, false};
    auto r = resmon::cpu_cores_used(prev, curr);
    REQUIRE(r.ok());
    CHECK(r.value() == doctest::Approx(0.5));
  }
  SUBCASE("idle container") {
    resmon::ResourceSample curr{2'000'000'000ull, 0, 0, 0, false};
    auto r = resmon::cpu_cores_used(prev, curr);
    REQUIRE(r.ok());
    CHECK(r.value() == 0.0);
  }
  SUBCASE("four-core saturation") {
    resmon::ResourceSample curr{2'000'000'000ull, 4'000'000'000ull, 0, 0, false};
    auto r = resmon::cpu_cores_used(prev, curr);
    REQUIRE(r.ok());
    CHECK(r.value() == doctest::Approx(4.0));
  }
  SUBCASE("restart flags zero") {
    resmon::ResourceSample p{1'000'000'000ull, 900, 0, 0, false};
    resmon::ResourceSample c{2'000'000'000ull, 100, 0, 0, false};
    bool restarted = false;
    auto r = resmon::cpu_cores_used(p, c, &restarted);
    REQUIRE(r.ok());
    CHECK(r.value() == 0.0);
    CHECK(restarted);
  }
  SUBCASE("non-monotonic time") {
    resmon::ResourceSample c{500, 100, 0, 0, false};
    auto r = resmon::cpu_cores_used(prev, c);
    REQUIRE(!r.ok());
    CHECK(r.error().code == errc::non_monotonic_time);
  }
}

TEST_CASE("resource series stats skip gaps and report binary MB") {
  std::vector<resmon::ResourceSample> series;
  // 1 s spacing, 0.25 cores, 512 MB steady.
  for (int i = 0; i < 5; ++i) {
    resmon::ResourceSample s;
    s.ts_ns = static_cast<std::uint64_t>(i) * 1'000'000'000ull;
    s.cpu_total_ns = static_cast<std::uint64_t>(i) * 250'000'000ull;
    s.mem_rss_bytes = 512ull * 1024 * 1024;
    series.push_back(s);
  }
  resmon::ResourceSample gap;
  gap.ts_ns = 5'000'000'000ull;
  gap.gap = true;
  series.push_back(gap);

  auto stats = resmon::summarize_series(series);
  CHECK(stats.cpu_cores.mean == doctest::Approx(0.25));
  CHECK(stats.cpu_cores.max == doctest::Approx(0.25));
  CHECK(stats.mem_mb.mean == doctest::Approx(512.0));
  CHECK(stats.gap_count == 1);
}
