#pragma once

#include <string>
#include <vector>

#include "mqbench/core/types.hpp"

namespace mqbench {

/// Returns every violated spec invariant; empty means the spec is runnable.
std::vector<std::string> validate_spec(const ExperimentSpec& spec);

}  // namespace mqbench
