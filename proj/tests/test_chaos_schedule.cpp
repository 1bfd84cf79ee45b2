#include <cmath>
#include <random>

#include "doctest.h"
#include "mqbench/chaos/schedule.hpp"

using namespace mqbench::chaos;

TEST_CASE("schedule is deterministic for a fixed seed") {
  auto a = schedule_failures(30, 5, 180, 1234);
  auto b = schedule_failures(30, 5, 180, 1234);
  CHECK(a == b);
  auto c = schedule_failures(30, 5, 180, 1235);
  CHECK(a != c);
}

TEST_CASE("schedule structure invariants") {
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    auto events = schedule_failures(30, 5, 180, seed);
    double prev_recover = 0.0;
    for (const auto& e : events) {
      CHECK(e.fail_at_s >= prev_recover);
      CHECK(e.fail_at_s < 180.0);
      CHECK(e.recover_at_s == doctest::Approx(e.fail_at_s + 5.0));
      prev_recover = e.recover_at_s;
    }
  }
}

TEST_CASE("duration shorter than the first gap yields an empty schedule") {
  // With mttf = 1e9 s, the first draw virtually never lands inside 1 s.
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    CHECK(schedule_failures(1e9, 5, 1.0, seed).empty());
  }
}

TEST_CASE("drawn gaps average the configured mttf") {
  // The recorded events under-sample long gaps (they get truncated at run
  // end), so the oracle replays the generator and averages every draw,
  // including the final one that overflowed the run.
  std::uint64_t draws = 0;
  double sum = 0.0;
  for (std::uint64_t seed = 0; seed < 4000; ++seed) {
    std::mt19937_64 rng(seed);
    double t = 0.0;
    while (true) {
      const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
      const double gap = -30.0 * std::log1p(-u);
      sum += gap;
      ++draws;
      if (t + gap >= 180.0) break;
      t += gap + 5.0;
    }
  }
  const double mean = sum / static_cast<double>(draws);
  CHECK(std::abs(mean - 30.0) / 30.0 < 0.02);
}

TEST_CASE("oracle replay reproduces the implementation exactly") {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    std::mt19937_64 rng(seed);
    std::vector<FailureEvent> expected;
    double t = 0.0;
    while (true) {
      const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
      const double fail = t + -30.0 * std::log1p(-u);
      if (fail >= 180.0) break;
      expected.push_back({fail, fail + 5.0});
      t = fail + 5.0;
    }
    CHECK(schedule_failures(30, 5, 180, seed) == expected);
  }
}

TEST_CASE("downtime fraction approaches mttr/(mttf+mttr)") {
  double total = 0.0;
  const int seeds = 4000;
  for (std::uint64_t seed = 0; seed < seeds; ++seed) {
    total += downtime_fraction(schedule_failures(30, 5, 180, seed), 180);
  }
  const double mean = total / seeds;
  CHECK(std::abs(mean - 5.0 / 35.0) / (5.0 / 35.0) < 0.05);
}
