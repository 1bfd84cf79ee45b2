#pragma once

#include <cstdint>
#include <vector>

namespace mqbench::chaos {

/// One outage window, offsets from run start in seconds.
struct FailureEvent {
  double fail_at_s = 0.0;
  double recover_at_s = 0.0;  // fail_at_s + mttr

  bool operator==(const FailureEvent&) const = default;
};

/// Poisson failure arrivals: gaps from previous recovery to next failure are
/// i.i.d. Exponential(mean = mttf_s); recovery is fixed at mttr_s. Events
/// whose failure would start at or past duration_s are dropped. The seeded
/// generator makes the schedule reproducible across platforms.
std::vector<FailureEvent> schedule_failures(double mttf_s, double mttr_s,
                                            double duration_s,
                                            std::uint64_t rng_seed);

/// Sum of outage time clamped to the run, as a fraction of duration_s.
double downtime_fraction(const std::vector<FailureEvent>& schedule,
                         double duration_s);

}  // namespace mqbench::chaos
