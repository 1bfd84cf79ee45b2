#include "mqbench/cli/formats.hpp"

#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

namespace mqbench::cli {

namespace {

using nlohmann::json;

Result<std::ofstream> open_out(const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) return make_error(errc::io_error, "cannot write " + path);
  return out;
}

Result<void> finish(std::ofstream& out, const std::string& path) {
  out.flush();
  if (!out) return make_error(errc::io_error, "short write to " + path);
  return {};
}

json spec_json(const ExperimentSpec& s) {
  json j{{"scenario", to_string(s.scenario)},
         {"transport", to_string(s.transport_kind)},
         {"endpoint", s.endpoint},
         {"pairs", s.pairs},
         {"fanout_subscribers", s.fanout_subscribers},
         {"rate_per_publisher", s.rate_per_publisher},
         {"payload_bytes", s.payload_bytes},
         {"duration_s", s.duration_s},
         {"warmup_s", s.warmup_s},
         {"qos", static_cast<int>(s.qos)},
         {"topic_prefix", s.topic_prefix},
         {"rng_seed", s.rng_seed}};
  if (s.mttf_s) j["mttf_s"] = *s.mttf_s;
  if (s.mttr_s) j["mttr_s"] = *s.mttr_s;
  return j;
}

Result<ExperimentSpec> spec_of(const json& j) {
  if (!j.is_object()) return make_error(errc::bad_config, "spec must be an object");
  ExperimentSpec s;
  try {
    if (j.contains("scenario")) {
      auto sc = parse_scenario(j["scenario"].get<std::string>());
      if (!sc.ok()) return sc.error();
      s.scenario = sc.value();
    }
    if (j.contains("transport")) {
      auto tk = parse_transport_kind(j["transport"].get<std::string>());
      if (!tk.ok()) return tk.error();
      s.transport_kind = tk.value();
    }
    if (j.contains("endpoint")) s.endpoint = j["endpoint"].get<std::string>();
    if (j.contains("pairs")) s.pairs = j["pairs"].get<std::uint32_t>();
    if (j.contains("fanout_subscribers"))
      s.fanout_subscribers = j["fanout_subscribers"].get<std::uint32_t>();
    if (j.contains("rate_per_publisher"))
      s.rate_per_publisher = j["rate_per_publisher"].get<double>();
    if (j.contains("payload_bytes"))
      s.payload_bytes = j["payload_bytes"].get<std::uint64_t>();
    if (j.contains("duration_s")) s.duration_s = j["duration_s"].get<double>();
    if (j.contains("warmup_s")) s.warmup_s = j["warmup_s"].get<double>();
    if (j.contains("qos")) {
      const int q = j["qos"].get<int>();
      if (q < 0 || q > 2) return make_error(errc::bad_config, "qos must be 0..2");
      s.qos = static_cast<QosLevel>(q);
    }
    if (j.contains("mttf_s")) s.mttf_s = j["mttf_s"].get<double>();
    if (j.contains("mttr_s")) s.mttr_s = j["mttr_s"].get<double>();
    if (j.contains("topic_prefix"))
      s.topic_prefix = j["topic_prefix"].get<std::string>();
    if (j.contains("rng_seed")) s.rng_seed = j["rng_seed"].get<std::uint64_t>();
  } catch (const json::exception& e) {
    return make_error(errc::bad_config, std::string("spec: ") + e.what());
  }
  return s;
}

json latency_json(const LatencyStats& l) {
  return {{"min_ns", l.min_ns},     {"mean_ns", l.mean_ns},
          {"stddev_ns", l.stddev_ns}, {"p50_ns", l.p50_ns},
          {"p95_ns", l.p95_ns},     {"p99_ns", l.p99_ns},
          {"max_ns", l.max_ns}};
}

json series_json(const SeriesStats& s) {
  return {{"mean", s.mean}, {"max", s.max}};
}

}  // namespace

Result<void> write_samples_csv(const std::string& path,
                               std::span<const LatencySample> samples) {
  auto out = open_out(path);
  if (!out.ok()) return out.error();
  out.value() << kSamplesHeader << '\n';
  for (const auto& s : samples) {
    out.value() << s.topic << ',' << s.seq << ',' << s.send_ts_ns << ','
                << s.recv_ts_ns << ',' << s.latency_ns << ',' << s.payload_bytes
                << '\n';
  }
  return finish(out.value(), path);
}

Result<void> write_connections_csv(const std::string& path,
                                   std::span<const ConnectionEvent> events) {
  auto out = open_out(path);
  if (!out.ok()) return out.error();
  out.value() << kConnectionsHeader << '\n';
  for (const auto& e : events) {
    out.value() << e.client_id << ',' << to_string(e.kind) << ',' << e.ts_ns
                << '\n';
  }
  return finish(out.value(), path);
}

Result<void> write_resources_csv(const std::string& path,
                                 std::span<const resmon::ResourceSample> series) {
  auto out = open_out(path);
  if (!out.ok()) return out.error();
  out.value() << kResourcesHeader << '\n';
  for (const auto& r : series) {
    out.value() << r.ts_ns << ',' << r.cpu_total_ns << ',' << r.mem_rss_bytes
                << ',' << (r.gap ? 1 : 0) << '\n';
  }
  return finish(out.value(), path);
}

Result<void> write_faults_csv(const std::string& path,
                              std::span<const chaos::ExecutedEvent> log) {
  auto out = open_out(path);
  if (!out.ok()) return out.error();
  auto& f = out.value();
  f << kFaultsHeader << '\n';
  for (const auto& ev : log) {
    f << ev.index << ',' << ev.scheduled_fail_s << ',' << ev.scheduled_recover_s
      << ',' << ev.actual_fail_ns << ',' << ev.actual_recover_ns << ','
      << ev.status << '\n';
  }
  return finish(f, path);
}

Result<std::vector<LatencySample>> read_samples_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) return make_error(errc::io_error, "cannot read " + path);
  std::string line;
  if (!std::getline(in, line) || line != kSamplesHeader) {
    return make_error(errc::bad_config, path + ": unexpected samples header");
  }
  std::vector<LatencySample> samples;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    LatencySample s;
    std::istringstream row(line);
    std::string field;
    if (!std::getline(row, s.topic, ',')) break;
    try {
      std::getline(row, field, ',');
      s.seq = std::stoull(field);
      std::getline(row, field, ',');
      s.send_ts_ns = std::stoull(field);
      std::getline(row, field, ',');
      s.recv_ts_ns = std::stoull(field);
      std::getline(row, field, ',');
      s.latency_ns = std::stoll(field);
      std::getline(row, field, ',');
      s.payload_bytes = std::stoull(field);
    } catch (const std::exception&) {
      return make_error(errc::bad_config, path + ": malformed row: " + line);
    }
    samples.push_back(std::move(s));
  }
  return samples;
}

std::string summary_to_json(const SummaryReport& r) {
  json j{{"spec", spec_json(r.spec)},
         {"stable_start_ns", r.stable_start_ns},
         {"stable_end_ns", r.stable_end_ns},
         {"published_count", r.published_count},
         {"received_count", r.received_count},
         {"duplicate_count", r.duplicate_count},
         {"throughput_msg_s", r.throughput_msg_s},
         {"latency", latency_json(r.latency)},
         {"loss_fraction", r.loss_fraction},
         {"cpu_cores", series_json(r.cpu_cores)},
         {"mem_mb", series_json(r.mem_mb)},
         {"negative_latency_count", r.negative_latency_count},
         {"malformed_count", r.malformed_count},
         {"degenerate", r.degenerate},
         {"warnings", r.warnings}};
  return j.dump(2) + "\n";
}

Result<SummaryReport> summary_from_json(const std::string& text) {
  auto j = json::parse(text, nullptr, false);
  if (j.is_discarded() || !j.is_object()) {
    return make_error(errc::bad_config, "summary is not a JSON object");
  }
  SummaryReport r;
  try {
    auto spec = spec_of(j.at("spec"));
    if (!spec.ok()) return spec.error();
    r.spec = spec.value();
    r.stable_start_ns = j.at("stable_start_ns").get<std::uint64_t>();
    r.stable_end_ns = j.at("stable_end_ns").get<std::uint64_t>();
    r.published_count = j.at("published_count").get<std::uint64_t>();
    r.received_count = j.at("received_count").get<std::uint64_t>();
    r.duplicate_count = j.at("duplicate_count").get<std::uint64_t>();
    r.throughput_msg_s = j.at("throughput_msg_s").get<double>();
    const auto& l = j.at("latency");
    r.latency.min_ns = l.at("min_ns").get<std::int64_t>();
    r.latency.mean_ns = l.at("mean_ns").get<double>();
    r.latency.stddev_ns = l.at("stddev_ns").get<double>();
    r.latency.p50_ns = l.at("p50_ns").get<std::int64_t>();
    r.latency.p95_ns = l.at("p95_ns").get<std::int64_t>();
    r.latency.p99_ns = l.at("p99_ns").get<std::int64_t>();
    r.latency.max_ns = l.at("max_ns").get<std::int64_t>();
    r.loss_fraction = j.at("loss_fraction").get<double>();
    r.cpu_cores.mean = j.at("cpu_cores").at("mean").get<double>();
    r.cpu_cores.max = j.at("cpu_cores").at("max").get<double>();
    r.mem_mb.mean = j.at("mem_mb").at("mean").get<double>();
    r.mem_mb.max = j.at("mem_mb").at("max").get<double>();
    r.negative_latency_count = j.at("negative_latency_count").get<std::uint64_t>();
    r.malformed_count = j.at("malformed_count").get<std::uint64_t>();
    r.degenerate = j.at("degenerate").get<bool>();
    r.warnings = j.at("warnings").get<std::vector<std::string>>();
  } catch (const json::exception& e) {
    return make_error(errc::bad_config, std::string("summary: ") + e.what());
  }
  return r;
}

Result<void> write_summary_json(const std::string& path,
                                const SummaryReport& report) {
  auto out = open_out(path);
  if (!out.ok()) return out.error();
  out.value() << summary_to_json(report);
  return finish(out.value(), path);
}

Result<SummaryReport> read_summary_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) return make_error(errc::io_error, "cannot read " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return summary_from_json(buf.str());
}

Result<RunConfig> parse_run_config(const std::string& text) {
  auto j = json::parse(text, nullptr, false);
  if (j.is_discarded() || !j.is_object()) {
    return make_error(errc::bad_config, "config is not a JSON object");
  }
  RunConfig cfg;
  try {
    if (j.contains("spec")) {
      auto spec = spec_of(j["spec"]);
      if (!spec.ok()) return spec.error();
      cfg.spec = spec.value();
    }
    if (j.contains("deployment")) {
      const auto& d = j["deployment"];
      auto& dep = cfg.deployment;
      if (d.contains("container_ctl"))
        dep.container_ctl = d["container_ctl"].get<std::string>();
      if (d.contains("image")) dep.image = d["image"].get<std::string>();
      if (d.contains("name")) dep.name = d["name"].get<std::string>();
      if (d.contains("env")) {
        for (const auto& [k, v] : d["env"].items()) {
          dep.env.emplace_back(k, v.get<std::string>());
        }
      }
      if (d.contains("ports")) {
        for (const auto& p : d["ports"]) {
          dep.ports.push_back({p.at("host").get<std::uint16_t>(),
                               p.at("container").get<std::uint16_t>()});
        }
      }
      if (d.contains("nofile_limit"))
        dep.nofile_limit = d["nofile_limit"].get<std::uint64_t>();
      if (d.contains("ready_host"))
        dep.ready_host = d["ready_host"].get<std::string>();
      if (d.contains("ready_timeout_s"))
        dep.ready_timeout_s = d["ready_timeout_s"].get<std::uint32_t>();
    }
    if (j.contains("out_dir")) cfg.out_dir = j["out_dir"].get<std::string>();
    if (j.contains("chaos")) {
      const auto& c = j["chaos"];
      if (c.contains("proxy_admin"))
        cfg.proxy_admin = c["proxy_admin"].get<std::string>();
      if (c.contains("proxy_name"))
        cfg.proxy_name = c["proxy_name"].get<std::string>();
      if (c.contains("subscriber_endpoint"))
        cfg.subscriber_endpoint = c["subscriber_endpoint"].get<std::string>();
    }
  } catch (const json::exception& e) {
    return make_error(errc::bad_config, std::string("config: ") + e.what());
  }
  return cfg;
}

std::string spec_to_json(const ExperimentSpec& spec) {
  return spec_json(spec).dump(2) + "\n";
}

Result<ExperimentSpec> spec_from_json(const std::string& text) {
  auto j = json::parse(text, nullptr, false);
  if (j.is_discarded()) return make_error(errc::bad_config, "spec is not JSON");
  return spec_of(j);
}

}  // namespace mqbench::cli
