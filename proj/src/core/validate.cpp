#include "mqbench/core/validate.hpp"

#include <string>

namespace mqbench {

std::vector<std::string> validate_spec(const ExperimentSpec& spec) {
  std::vector<std::string> violations;
  auto bad = [&](std::string msg) { violations.push_back(std::move(msg)); };

  if (spec.is_fanout()) {
    if (spec.fanout_subscribers < 1) bad("fanout_subscribers >= 1 required for fanout");
  } else {
    if (spec.pairs < 1) bad("pairs >= 1 required for 1-to-1 scenarios");
  }
  if (spec.payload_bytes < 24) {
    bad("payload_bytes >= 24 required (payload must hold the header)");
  }
  if (!(spec.duration_s > 0)) bad("duration_s > 0 required");
  if (spec.warmup_s < 0) bad("warmup_s >= 0 required");
  if (!(spec.rate_per_publisher > 0)) bad("rate_per_publisher > 0 required");

  if (spec.mttf_s.has_value() != spec.mttr_s.has_value()) {
    bad("mttf_s and mttr_s must be both present or both absent");
  }
  if (spec.mttf_s && !(*spec.mttf_s > 0)) bad("mttf_s > 0 required when present");
  if (spec.mttr_s && !(*spec.mttr_s > 0)) bad("mttr_s > 0 required when present");

  if (spec.qos > max_qos_for(spec.transport_kind)) {
    bad(std::string("UnsupportedQoS: ") + to_string(spec.transport_kind) +
        " supports qos <= " +
        std::to_string(static_cast<int>(max_qos_for(spec.transport_kind))));
  }
  if (spec.topic_prefix.empty()) bad("topic_prefix must be non-empty");
  return violations;
}

}  // namespace mqbench
