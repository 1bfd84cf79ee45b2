#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>

#include "mqbench/core/types.hpp"
#include "mqbench/metrics/stable_period.hpp"
#include "mqbench/result.hpp"

namespace mqbench::metrics {

/// Samples received inside the stable period divided by its duration.
double compute_throughput(std::span<const LatencySample> samples,
                          const StablePeriod& period);

struct LossAccounting {
  double loss_fraction = 0.0;
  std::uint64_t duplicate_count = 0;
  std::uint64_t published_total = 0;
  std::uint64_t unique_received = 0;
};

/// Deduplicates by (topic, seq) before comparing against publish counts.
Result<LossAccounting> compute_loss(
    const std::map<std::string, std::uint64_t>& published_per_topic,
    std::span<const LatencySample> samples);

}  // namespace mqbench::metrics
