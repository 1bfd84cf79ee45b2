#pragma once

#include <span>
#include <string>

#include "mqbench/core/types.hpp"

namespace mqbench::cli {

/// Canonical JSON, same bytes as summary_to_json.
std::string render_json(const SummaryReport& report);

/// One data row per summary under a fixed header.
std::string render_csv(std::span<const SummaryReport> reports);

/// Human-aligned columns with units; latency in ms with two decimals,
/// loss as a percentage. Degenerate rows are suffixed [DEGENERATE].
std::string render_table(std::span<const SummaryReport> reports);

}  // namespace mqbench::cli
