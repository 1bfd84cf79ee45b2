#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "mqbench/core/types.hpp"
#include "mqbench/net/io_runtime.hpp"
#include "mqbench/orchestrator/container_engine.hpp"
#include "mqbench/result.hpp"

namespace mqbench::orchestrator {

/// Where one run left its outputs. On a completed run every referenced
/// file exists and is non-empty (header-only CSVs at minimum).
struct RunArtifacts {
  ExperimentSpec spec;
  std::string dir;
  std::string samples_path;
  std::string connections_path;
  std::string resources_path;
  std::string faults_path;
  std::string summary_path;
  SummaryReport summary;
  bool completed = false;  // false: failed before producing a summary
  std::string error;
};

struct ScenarioOptions {
  std::string out_dir = "out";
  std::string broker_label;        // layout component; transport kind if empty
  std::string axis_label = "run";  // layout leaf
  double monitor_interval_s = 1.0;
  // Fault injection: with a schedule in the spec and these set, the
  // executor drives the proxy while the load runs.
  std::string proxy_admin;
  std::string proxy_name;
  // Subscribers dial this instead of spec.endpoint when set (the proxy
  // listener, so outages cut only the subscriber leg).
  std::string subscriber_endpoint;
  std::uint32_t drain_ms = 500;  // post-schedule delivery grace
};

/// Full lifecycle: broker up (when managed), monitor up, subscribers
/// subscribed before any publisher starts, open-loop load for
/// warmup_s + duration_s with the fault executor running concurrently,
/// then teardown in reverse and artifact writes. A broker that dies
/// mid-run does not abort: the run completes and the summary comes back
/// degenerate-flagged.
Result<RunArtifacts> run_scenario(net::IoRuntime& io, const ExperimentSpec& spec,
                                  const BrokerDeployment& deployment,
                                  const ScenarioOptions& opts = {});

/// Applies one sweep-axis value to a copy of the base spec.
/// axis is one of: pairs, payload_bytes, fanout_subscribers, qos.
Result<ExperimentSpec> apply_axis(const ExperimentSpec& base,
                                  const std::string& axis, double value);

/// Early-stop rule: measured stable throughput under fraction x offered.
bool saturated(const SummaryReport& summary, double fraction);

struct SweepResult {
  std::vector<RunArtifacts> runs;
  std::optional<std::size_t> stopped_at;  // index of the saturated run
};

using ScenarioRunner = std::function<Result<RunArtifacts>(
    const ExperimentSpec&, const BrokerDeployment&, const ScenarioOptions&)>;

struct SweepOptions {
  ScenarioOptions scenario;
  bool early_stop = false;          // full grids by default
  double saturation_fraction = 0.95;
  ScenarioRunner runner;            // injectable for tests; run_scenario if empty
};

/// One run per value, sequentially, each against a fresh broker. Failed
/// runs are recorded and the sweep continues; with early_stop, a run that
/// measures saturation ends the sweep after itself.
Result<SweepResult> run_sweep(net::IoRuntime& io, const ExperimentSpec& base,
                              const std::string& axis,
                              const std::vector<double>& values,
                              const BrokerDeployment& deployment,
                              const SweepOptions& opts = {});

}  // namespace mqbench::orchestrator
