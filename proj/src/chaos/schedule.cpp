#include "mqbench/chaos/schedule.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace mqbench::chaos {

std::vector<FailureEvent> schedule_failures(double mttf_s, double mttr_s,
                                            double duration_s,
                                            std::uint64_t rng_seed) {
  std::vector<FailureEvent> events;
  if (!(mttf_s > 0) || mttr_s < 0 || !(duration_s > 0)) return events;

  // mt19937_64 output is pinned by the standard; the inverse-CDF transform
  // below keeps the draw itself portable too (std::exponential_distribution
  // is implementation-defined).
  std::mt19937_64 rng(rng_seed);
  double t = 0.0;
  while (true) {
    const double u =
        static_cast<double>(rng() >> 11) * 0x1.0p-53;  // uniform [0,1)
    const double gap = -mttf_s * std::log1p(-u);
    const double fail = t + gap;
    if (fail >= duration_s) break;
    FailureEvent e;
    e.fail_at_s = fail;
    e.recover_at_s = fail + mttr_s;
    events.push_back(e);
    t = e.recover_at_s;
  }
  return events;
}

double downtime_fraction(const std::vector<FailureEvent>& schedule,
                         double duration_s) {
  if (!(duration_s > 0)) return 0.0;
  double down = 0.0;
  for (const auto& e : schedule) {
    down += std::min(e.recover_at_s, duration_s) - std::min(e.fail_at_s, duration_s);
  }
  return down / duration_s;
}

}  // namespace mqbench::chaos
