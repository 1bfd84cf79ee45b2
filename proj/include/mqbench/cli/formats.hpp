#pragma once

#include <span>
#include <string>
#include <vector>

#include "mqbench/chaos/executor.hpp"
#include "mqbench/core/types.hpp"
#include "mqbench/orchestrator/container_engine.hpp"
#include "mqbench/resmon/resource_sample.hpp"
#include "mqbench/result.hpp"

namespace mqbench::cli {

/// Pinned CSV headers. Compatibility contract: these columns never change
/// or reorder; new columns may only ever be appended.
inline constexpr char kSamplesHeader[] =
    "topic,seq,send_ts_ns,recv_ts_ns,latency_ns,payload_bytes";
inline constexpr char kConnectionsHeader[] = "client_id,kind,ts_ns";
inline constexpr char kResourcesHeader[] = "ts_ns,cpu_total_ns,mem_rss_bytes,gap";
inline constexpr char kFaultsHeader[] =
    "event_index,scheduled_fail_s,scheduled_recover_s,actual_fail_ns,"
    "actual_recover_ns,status";

Result<void> write_samples_csv(const std::string& path,
                               std::span<const LatencySample> samples);
Result<void> write_connections_csv(const std::string& path,
                                   std::span<const ConnectionEvent> events);
Result<void> write_resources_csv(const std::string& path,
                                 std::span<const resmon::ResourceSample> series);
Result<void> write_faults_csv(const std::string& path,
                              std::span<const chaos::ExecutedEvent> log);

Result<std::vector<LatencySample>> read_samples_csv(const std::string& path);

/// Canonical summary serialization: keys mirror the SummaryReport field
/// names, sorted, timestamps as integer ns, fractions as decimals in [0,1].
/// parse(render(s)) == s.
std::string summary_to_json(const SummaryReport& report);
Result<SummaryReport> summary_from_json(const std::string& text);

Result<void> write_summary_json(const std::string& path,
                                const SummaryReport& report);
Result<SummaryReport> read_summary_json(const std::string& path);

/// Everything `run` and `sweep` need from one config file.
struct RunConfig {
  ExperimentSpec spec;
  orchestrator::BrokerDeployment deployment;
  std::string out_dir;             // overridden by --out / MQBENCH_OUT
  std::string proxy_admin;         // fault-proxy admin, for fault schedules
  std::string proxy_name;
  std::string subscriber_endpoint; // subscribers dial this when set
};

Result<RunConfig> parse_run_config(const std::string& text);

/// Spec serialization used inside summaries and configs.
std::string spec_to_json(const ExperimentSpec& spec);
Result<ExperimentSpec> spec_from_json(const std::string& text);

}  // namespace mqbench::cli
