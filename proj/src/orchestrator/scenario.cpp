#include "mqbench/orchestrator/scenario.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <map>
#include <memory>
#include <stop_token>
#include <thread>

#include "mqbench/chaos/executor.hpp"
#include "mqbench/chaos/schedule.hpp"
#include "mqbench/cli/formats.hpp"
#include "mqbench/clock.hpp"
#include "mqbench/core/validate.hpp"
#include "mqbench/load/publisher.hpp"
#include "mqbench/load/subscriber.hpp"
#include "mqbench/metrics/summarize.hpp"
#include "mqbench/resmon/monitor.hpp"
#include "mqbench/transport/transport.hpp"

namespace mqbench::orchestrator {

namespace fs = std::filesystem;

namespace {

std::string topic_for(const ExperimentSpec& spec, std::uint32_t i) {
  if (spec.is_fanout()) return spec.topic_prefix + "/fanout";
  return spec.topic_prefix + "/" + std::to_string(i);
}

transport::TransportOptions client_options(
    const ExperimentSpec& spec, std::string id,
    std::shared_ptr<transport::ConnectionLog> events, bool subscriber) {
  transport::TransportOptions o;
  o.client_id = std::move(id);
  // Persistent sessions only where redelivery semantics need them: a qos1+
  // subscriber must survive outages with its server-side queue intact.
  o.clean_session = !(subscriber && spec.qos >= QosLevel::at_least_once);
  o.events = std::move(events);
  return o;
}

}  // namespace

Result<RunArtifacts> run_scenario(net::IoRuntime& io, const ExperimentSpec& spec,
                                  const BrokerDeployment& deployment,
                                  const ScenarioOptions& opts) {
  if (auto violations = validate_spec(spec); !violations.empty()) {
    std::string msg = "invalid spec:";
    for (const auto& v : violations) msg += " " + v + ";";
    return make_error(errc::invalid_spec, msg);
  }

  RunArtifacts art;
  art.spec = spec;
  const std::string broker_label =
      opts.broker_label.empty() ? to_string(spec.transport_kind)
                                : opts.broker_label;
  const fs::path dir = fs::path(opts.out_dir) / to_string(spec.scenario) /
                       broker_label / opts.axis_label;
  std::error_code fec;
  fs::create_directories(dir, fec);
  if (fec) {
    return make_error(errc::io_error,
                      "cannot create " + dir.string() + ": " + fec.message());
  }
  art.dir = dir.string();
  art.samples_path = (dir / "samples.csv").string();
  art.connections_path = (dir / "connections.csv").string();
  art.resources_path = (dir / "resources.csv").string();
  art.faults_path = (dir / "faults.csv").string();
  art.summary_path = (dir / "summary.json").string();

  std::string container_id;
  if (deployment.managed()) {
    auto id = start_broker(deployment);
    if (!id.ok()) return id.error();
    container_id = id.take();
  }

  std::optional<resmon::Monitor> monitor;
  if (!container_id.empty()) {
    monitor.emplace(resmon::MonitorConfig{deployment.container_ctl,
                                          container_id,
                                          opts.monitor_interval_s});
  }

  std::vector<transport::SessionPtr> subs;
  std::vector<transport::SessionPtr> pubs;
  const auto cleanup = [&] {
    for (auto& s : pubs) s->disconnect();
    for (auto& s : subs) s->disconnect();
    if (monitor) monitor->stop();
    stop_broker(deployment.container_ctl, container_id);
  };

  auto events = std::make_shared<transport::ConnectionLog>();
  const std::string sub_endpoint = opts.subscriber_endpoint.empty()
                                       ? spec.endpoint
                                       : opts.subscriber_endpoint;
  const std::uint32_t n_subs =
      spec.is_fanout() ? spec.fanout_subscribers : spec.pairs;
  const std::uint32_t n_pubs = spec.is_fanout() ? 1 : spec.pairs;

  // Subscribers first, and every subscription live before any publisher
  // exists: qos0 loss then measures the broker, never harness startup.
  std::vector<std::shared_ptr<load::SampleBuffer>> buffers;
  for (std::uint32_t i = 0; i < n_subs; ++i) {
    auto session = transport::connect(
        io, spec.transport_kind, sub_endpoint,
        client_options(spec, "sub-" + std::to_string(i), events, true));
    if (!session.ok()) {
      cleanup();
      return session.error();
    }
    auto buf = std::make_shared<load::SampleBuffer>();
    if (auto r = session.value()->subscribe(topic_for(spec, i), spec.qos,
                                            buf->sink());
        !r.ok()) {
      cleanup();
      return r.error();
    }
    buffers.push_back(std::move(buf));
    subs.push_back(session.take());
  }

  std::vector<std::shared_ptr<load::PublisherEngine>> engines;
  std::vector<std::string> engine_topics;
  const std::uint64_t window_ns =
      static_cast<std::uint64_t>((spec.warmup_s + spec.duration_s) * 1e9);
  const std::uint64_t period_ns =
      static_cast<std::uint64_t>(1e9 / spec.rate_per_publisher);
  for (std::uint32_t i = 0; i < n_pubs; ++i) {
    auto session = transport::connect(
        io, spec.transport_kind, spec.endpoint,
        client_options(spec, "pub-" + std::to_string(i), events, false));
    if (!session.ok()) {
      cleanup();
      return session.error();
    }
    load::PublisherConfig cfg;
    cfg.rate = spec.rate_per_publisher;
    cfg.payload_bytes = spec.payload_bytes;
    cfg.qos = spec.qos;
    cfg.duration_ns = window_ns;
    // Stagger starts over one period so 10k publishers never phase-align.
    cfg.start_offset_ns = period_ns * i / std::max<std::uint32_t>(n_pubs, 1);
    engine_topics.push_back(topic_for(spec, i));
    pubs.push_back(session.take());
    engines.push_back(std::make_shared<load::PublisherEngine>(
        io, *pubs.back(), engine_topics.back(), cfg));
  }

  const std::uint64_t run_start_ns = wall_now_ns();
  for (auto& e : engines) e->start();

  // Fault schedule runs beside the load, reconnecting subscribers after
  // each restore under their original client ids.
  std::vector<chaos::ExecutedEvent> fault_log;
  std::stop_source chaos_stop;
  std::optional<std::thread> chaos_thread;
  if (spec.mttf_s && spec.mttr_s && !opts.proxy_admin.empty()) {
    auto schedule = chaos::schedule_failures(
        *spec.mttf_s, *spec.mttr_s, spec.warmup_s + spec.duration_s,
        spec.rng_seed);
    chaos_thread.emplace([&, schedule = std::move(schedule)] {
      fault_log = chaos::run_fault_schedule(
          schedule, opts.proxy_admin, opts.proxy_name,
          [&subs] {
            for (auto& s : subs) {
              if (!s->connected()) {
                (void)s->reconnect();  // next restore retries a failure
              }
            }
          },
          chaos_stop.get_token());
    });
  }

  std::map<std::string, std::uint64_t> published_per_topic;
  std::uint64_t publish_errors = 0;
  std::uint64_t unresolved = 0;
  bool aborted = false;
  for (std::size_t i = 0; i < engines.size(); ++i) {
    const auto stats = engines[i]->wait();
    published_per_topic[engine_topics[i]] += stats.published_count;
    publish_errors += stats.publish_errors;
    unresolved += stats.unresolved_count;
    aborted = aborted || stats.aborted_by_transport;
  }
  const std::uint64_t run_end_ns = wall_now_ns();

  chaos_stop.request_stop();
  if (chaos_thread) chaos_thread->join();

  std::this_thread::sleep_for(std::chrono::milliseconds(opts.drain_ms));

  for (auto& s : pubs) s->disconnect();
  for (auto& s : subs) s->disconnect();

  std::vector<resmon::ResourceSample> resources;
  if (monitor) resources = monitor->stop();
  stop_broker(deployment.container_ctl, container_id);

  metrics::RunData run;
  run.spec = spec;
  for (auto& buf : buffers) {
    auto chunk = buf->take();
    run.malformed_count += buf->malformed_count();
    run.samples.insert(run.samples.end(),
                       std::make_move_iterator(chunk.begin()),
                       std::make_move_iterator(chunk.end()));
  }
  run.events = events->snapshot();
  run.published_per_topic = std::move(published_per_topic);
  run.resources = std::move(resources);
  run.run_start_ns = run_start_ns;
  run.run_end_ns = run_end_ns;

  art.summary = metrics::summarize(run);
  if (deployment.managed() &&
      deployment.nofile_limit < 2ull * (n_subs + n_pubs)) {
    art.summary.warnings.push_back(
        "nofile_limit below 2x planned sessions; broker may shed connects");
  }
  if (publish_errors > 0) {
    art.summary.warnings.push_back(std::to_string(publish_errors) +
                                   " publish errors");
  }
  if (unresolved > 0) {
    art.summary.warnings.push_back(std::to_string(unresolved) +
                                   " publishes never acknowledged");
  }
  if (aborted) {
    art.summary.warnings.push_back("a publisher session died mid-run");
  }

  if (auto r = cli::write_samples_csv(art.samples_path, run.samples); !r.ok())
    return r.error();
  if (auto r = cli::write_connections_csv(art.connections_path, run.events);
      !r.ok())
    return r.error();
  if (auto r = cli::write_resources_csv(art.resources_path, run.resources);
      !r.ok())
    return r.error();
  if (auto r = cli::write_faults_csv(art.faults_path, fault_log); !r.ok())
    return r.error();
  if (auto r = cli::write_summary_json(art.summary_path, art.summary); !r.ok())
    return r.error();

  art.completed = true;
  return art;
}

Result<ExperimentSpec> apply_axis(const ExperimentSpec& base,
                                  const std::string& axis, double value) {
  ExperimentSpec spec = base;
  if (axis == "pairs") {
    spec.pairs = static_cast<std::uint32_t>(value);
  } else if (axis == "payload_bytes") {
    spec.payload_bytes = static_cast<std::uint64_t>(value);
  } else if (axis == "fanout_subscribers") {
    spec.fanout_subscribers = static_cast<std::uint32_t>(value);
  } else if (axis == "qos") {
    if (value != 0 && value != 1 && value != 2) {
      return make_error(errc::bad_config, "qos axis values must be 0, 1 or 2");
    }
    spec.qos = static_cast<QosLevel>(static_cast<int>(value));
  } else {
    return make_error(errc::bad_config, "unknown sweep axis: " + axis);
  }
  return spec;
}

bool saturated(const SummaryReport& summary, double fraction) {
  return summary.throughput_msg_s <
         fraction * summary.spec.offered_load_msg_s();
}

Result<SweepResult> run_sweep(net::IoRuntime& io, const ExperimentSpec& base,
                              const std::string& axis,
                              const std::vector<double>& values,
                              const BrokerDeployment& deployment,
                              const SweepOptions& opts) {
  // Reject a bad axis before burning broker time on run one.
  if (auto probe = apply_axis(base, axis, values.empty() ? 0.0 : values.front());
      !probe.ok()) {
    return probe.error();
  }

  const ScenarioRunner runner =
      opts.runner ? opts.runner
                  : [&io](const ExperimentSpec& s, const BrokerDeployment& d,
                          const ScenarioOptions& o) {
                      return run_scenario(io, s, d, o);
                    };

  SweepResult out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    auto spec = apply_axis(base, axis, values[i]);
    if (!spec.ok()) return spec.error();

    char label[64];
    if (values[i] == std::floor(values[i])) {
      std::snprintf(label, sizeof(label), "%s-%lld", axis.c_str(),
                    static_cast<long long>(values[i]));
    } else {
      std::snprintf(label, sizeof(label), "%s-%g", axis.c_str(), values[i]);
    }
    ScenarioOptions sopts = opts.scenario;
    sopts.axis_label = label;

    auto run = runner(spec.value(), deployment, sopts);
    if (run.ok()) {
      out.runs.push_back(run.take());
      if (opts.early_stop &&
          saturated(out.runs.back().summary, opts.saturation_fraction)) {
        out.stopped_at = i;
        break;
      }
    } else {
      // Recorded, not fatal: the grid must stay index-aligned with values.
      RunArtifacts failed;
      failed.spec = spec.value();
      failed.error = run.error().message;
      out.runs.push_back(std::move(failed));
    }
  }
  return out;
}

}  // namespace mqbench::orchestrator
