#include "mqbench/cli/cli.hpp"

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <stop_token>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "mqbench/chaos/fault_proxy.hpp"
#include "mqbench/cli/formats.hpp"
#include "mqbench/cli/report.hpp"
#include "mqbench/core/validate.hpp"
#include "mqbench/load/publisher.hpp"
#include "mqbench/load/subscriber.hpp"
#include "mqbench/net/io_runtime.hpp"
#include "mqbench/orchestrator/scenario.hpp"
#include "mqbench/transport/mini_broker.hpp"
#include "mqbench/transport/transport.hpp"

namespace mqbench::cli {

namespace {

constexpr int kOk = 0;
constexpr int kUsage = 1;
constexpr int kRuntime = 2;
constexpr int kDegenerate = 3;

constexpr const char* kUsageText = R"(usage: mq-bench <command> [flags]

commands:
  pub     --transport K --endpoint U --topic T [--rate R] [--payload B]
          [--duration S] [--qos Q] [--client-id ID]
  sub     --transport K --endpoint U --topic T [--duration S] [--qos Q]
          [--out FILE] [--client-id ID]
  run     --config FILE [--out DIR]
  sweep   --config FILE --axis NAME --values V1,V2,... [--early-stop]
          [--out DIR]
  report  --in DIR [--format json|csv|table]
  broker       [--port P]        hermetic MQTT broker, stops on stdin EOF
  fault-proxy  [--admin-port P]  TCP fault proxy, stops on stdin EOF

The default output directory is $MQBENCH_OUT, then ./out.
)";

struct Args {
  std::map<std::string, std::string> flags;
  bool bad = false;

  bool has(const std::string& k) const { return flags.count(k) != 0; }
  std::string get(const std::string& k, const std::string& fallback = "") const {
    auto it = flags.find(k);
    return it == flags.end() ? fallback : it->second;
  }
};

Args parse_args(int argc, const char* const* argv, int from) {
  // Flags without a value are boolean switches.
  static const std::vector<std::string> kSwitches = {"early-stop"};
  Args a;
  for (int i = from; i < argc; ++i) {
    std::string tok = argv[i];
    if (tok.rfind("--", 0) != 0) {
      a.bad = true;
      return a;
    }
    tok = tok.substr(2);
    const bool is_switch =
        std::find(kSwitches.begin(), kSwitches.end(), tok) != kSwitches.end();
    if (is_switch) {
      a.flags[tok] = "true";
    } else if (i + 1 < argc) {
      a.flags[tok] = argv[++i];
    } else {
      a.bad = true;
      return a;
    }
  }
  return a;
}

int usage_error(const std::string& msg) {
  std::cerr << "mq-bench: " << msg << "\n" << kUsageText;
  return kUsage;
}

std::optional<double> to_double(const std::string& s) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) return std::nullopt;
    return v;
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

std::string default_out_dir() {
  if (const char* env = std::getenv("MQBENCH_OUT"); env && *env) return env;
  return "out";
}

Result<ExperimentSpec> role_spec(const Args& a) {
  ExperimentSpec spec;
  auto kind = parse_transport_kind(a.get("transport"));
  if (!kind.ok()) return kind.error();
  spec.transport_kind = kind.value();
  spec.endpoint = a.get("endpoint");
  if (spec.endpoint.empty()) {
    return make_error(errc::bad_config, "--endpoint is required");
  }
  const auto rate = to_double(a.get("rate", "10"));
  const auto payload = to_double(a.get("payload", "1024"));
  const auto duration = to_double(a.get("duration", "10"));
  const auto qos = to_double(a.get("qos", "0"));
  if (!rate || !payload || !duration || !qos) {
    return make_error(errc::bad_config, "numeric flag is not a number");
  }
  if (*qos != 0 && *qos != 1 && *qos != 2) {
    return make_error(errc::bad_config, "--qos must be 0, 1 or 2");
  }
  spec.rate_per_publisher = *rate;
  spec.payload_bytes = static_cast<std::uint64_t>(*payload);
  spec.duration_s = *duration;
  spec.qos = static_cast<QosLevel>(static_cast<int>(*qos));
  if (auto violations = validate_spec(spec); !violations.empty()) {
    std::string msg;
    for (const auto& v : violations) msg += (msg.empty() ? "" : "; ") + v;
    return make_error(errc::invalid_spec, msg);
  }
  return spec;
}

int do_pub(const Args& a) {
  const std::string topic = a.get("topic");
  if (topic.empty()) return usage_error("pub: --topic is required");
  auto spec = role_spec(a);
  if (!spec.ok()) return usage_error("pub: " + spec.error().message);

  net::IoRuntime io;
  transport::TransportOptions opts;
  opts.client_id = a.get("client-id", "pub-cli");
  auto session = transport::connect(io, spec.value().transport_kind,
                                    spec.value().endpoint, std::move(opts));
  if (!session.ok()) {
    std::cerr << "mq-bench: " << session.error().message << "\n";
    return kRuntime;
  }
  const auto stats = load::run_publisher(spec.value(), io, *session.value(),
                                         topic);
  std::cout << "published=" << stats.published_count << "\n";
  if (stats.publish_errors > 0) {
    std::cerr << "mq-bench: " << stats.publish_errors << " publish errors\n";
  }
  return stats.aborted_by_transport ? kRuntime : kOk;
}

int do_sub(const Args& a) {
  const std::string topic = a.get("topic");
  if (topic.empty()) return usage_error("sub: --topic is required");
  auto spec = role_spec(a);
  if (!spec.ok()) return usage_error("sub: " + spec.error().message);

  net::IoRuntime io;
  transport::TransportOptions opts;
  opts.client_id = a.get("client-id", "sub-cli");
  opts.clean_session = spec.value().qos < QosLevel::at_least_once ? true : false;
  auto session = transport::connect(io, spec.value().transport_kind,
                                    spec.value().endpoint, std::move(opts));
  if (!session.ok()) {
    std::cerr << "mq-bench: " << session.error().message << "\n";
    return kRuntime;
  }

  auto buf = std::make_shared<load::SampleBuffer>();
  std::stop_source stopper;
  std::thread timer([&] {
    std::this_thread::sleep_for(
        std::chrono::duration<double>(spec.value().duration_s));
    stopper.request_stop();
  });
  auto received = load::run_subscriber(spec.value(), *session.value(), topic,
                                       buf, stopper.get_token());
  timer.join();
  if (!received.ok()) {
    std::cerr << "mq-bench: " << received.error().message << "\n";
    return kRuntime;
  }
  if (const auto out = a.get("out"); !out.empty()) {
    if (auto r = write_samples_csv(out, buf->snapshot()); !r.ok()) {
      std::cerr << "mq-bench: " << r.error().message << "\n";
      return kRuntime;
    }
  }
  std::cout << "received=" << received.value() << "\n";
  if (buf->malformed_count() > 0) {
    std::cerr << "mq-bench: " << buf->malformed_count()
              << " malformed messages\n";
  }
  return kOk;
}

Result<RunConfig> load_config(const Args& a) {
  const std::string path = a.get("config");
  if (path.empty()) return make_error(errc::bad_config, "--config is required");
  std::ifstream in(path);
  if (!in) return make_error(errc::io_error, "cannot read " + path);
  std::stringstream text;
  text << in.rdbuf();
  auto cfg = parse_run_config(text.str());
  if (!cfg.ok()) return cfg;
  if (a.has("out")) {
    cfg.value().out_dir = a.get("out");
  } else if (cfg.value().out_dir.empty()) {
    cfg.value().out_dir = default_out_dir();
  }
  return cfg;
}

orchestrator::ScenarioOptions scenario_options(const RunConfig& cfg) {
  orchestrator::ScenarioOptions o;
  o.out_dir = cfg.out_dir;
  o.proxy_admin = cfg.proxy_admin;
  o.proxy_name = cfg.proxy_name;
  o.subscriber_endpoint = cfg.subscriber_endpoint;
  return o;
}

int do_run(const Args& a) {
  auto cfg = load_config(a);
  if (!cfg.ok()) return usage_error("run: " + cfg.error().message);

  net::IoRuntime io;
  auto run = orchestrator::run_scenario(io, cfg.value().spec,
                                        cfg.value().deployment,
                                        scenario_options(cfg.value()));
  if (!run.ok()) {
    std::cerr << "mq-bench: " << run.error().message << "\n";
    return run.error().code == errc::invalid_spec ? kUsage : kRuntime;
  }
  const SummaryReport summary[] = {run.value().summary};
  std::cout << render_table(summary);
  std::cout << "artifacts: " << run.value().dir << "\n";
  return run.value().summary.degenerate ? kDegenerate : kOk;
}

int do_sweep(const Args& a) {
  auto cfg = load_config(a);
  if (!cfg.ok()) return usage_error("sweep: " + cfg.error().message);
  const std::string axis = a.get("axis");
  if (axis.empty()) return usage_error("sweep: --axis is required");
  std::vector<double> values;
  std::stringstream list(a.get("values"));
  std::string item;
  while (std::getline(list, item, ',')) {
    const auto v = to_double(item);
    if (!v) return usage_error("sweep: bad value '" + item + "'");
    values.push_back(*v);
  }
  if (values.empty()) return usage_error("sweep: --values is required");

  net::IoRuntime io;
  orchestrator::SweepOptions opts;
  opts.scenario = scenario_options(cfg.value());
  opts.early_stop = a.has("early-stop");
  auto sweep = orchestrator::run_sweep(io, cfg.value().spec, axis, values,
                                       cfg.value().deployment, opts);
  if (!sweep.ok()) return usage_error("sweep: " + sweep.error().message);

  std::vector<SummaryReport> completed;
  bool any_bad = false;
  for (const auto& run : sweep.value().runs) {
    if (run.completed) {
      completed.push_back(run.summary);
      any_bad = any_bad || run.summary.degenerate;
    } else {
      std::cerr << "mq-bench: run failed: " << run.error << "\n";
      any_bad = true;
    }
  }
  std::cout << render_table(completed);
  if (sweep.value().stopped_at) {
    std::cout << "early-stop: saturation at value index "
              << *sweep.value().stopped_at << "\n";
  }
  return any_bad ? kDegenerate : kOk;
}

int do_report(const Args& a) {
  const std::string in = a.get("in");
  if (in.empty()) return usage_error("report: --in is required");
  const std::string format = a.get("format", "table");
  if (format != "json" && format != "csv" && format != "table") {
    return usage_error("report: unknown format " + format);
  }

  namespace fs = std::filesystem;
  std::vector<std::string> files;
  std::error_code ec;
  if (fs::is_regular_file(fs::path(in) / "summary.json", ec)) {
    files.push_back((fs::path(in) / "summary.json").string());
  } else if (fs::is_directory(in, ec)) {
    for (const auto& entry : fs::recursive_directory_iterator(in, ec)) {
      if (entry.is_regular_file() && entry.path().filename() == "summary.json") {
        files.push_back(entry.path().string());
      }
    }
    std::sort(files.begin(), files.end());
  }
  if (files.empty()) {
    std::cerr << "mq-bench: no summary.json under " << in << "\n";
    return kRuntime;
  }

  std::vector<SummaryReport> reports;
  for (const auto& f : files) {
    auto r = read_summary_json(f);
    if (!r.ok()) {
      std::cerr << "mq-bench: " << f << ": " << r.error().message << "\n";
      return kRuntime;
    }
    reports.push_back(r.take());
  }

  if (format == "table") {
    std::cout << render_table(reports);
  } else if (format == "csv") {
    std::cout << render_csv(reports);
  } else if (reports.size() == 1) {
    std::cout << render_json(reports.front());
  } else {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& r : reports) arr.push_back(nlohmann::json::parse(render_json(r)));
    std::cout << arr.dump(2) << "\n";
  }
  return kOk;
}

void wait_for_stdin_eof() {
  std::string line;
  while (std::getline(std::cin, line)) {
  }
}

int do_broker(const Args& a) {
  const auto port = to_double(a.get("port", "0"));
  if (!port) return usage_error("broker: bad --port");
  net::IoRuntime io;
  auto broker = transport::MiniBroker::serve(
      io, "127.0.0.1", static_cast<std::uint16_t>(*port));
  if (!broker.ok()) {
    std::cerr << "mq-bench: " << broker.error().message << "\n";
    return kRuntime;
  }
  std::cout << "listening=" << broker.value()->port() << std::endl;
  wait_for_stdin_eof();
  broker.value()->stop();
  return kOk;
}

int do_fault_proxy(const Args& a) {
  const auto port = to_double(a.get("admin-port", "0"));
  if (!port) return usage_error("fault-proxy: bad --admin-port");
  net::IoRuntime io;
  chaos::FaultProxy proxy(io, static_cast<std::uint16_t>(*port));
  std::cout << "admin=" << proxy.admin_port() << std::endl;
  wait_for_stdin_eof();
  proxy.stop();
  return kOk;
}

}  // namespace

int cli_main(int argc, const char* const* argv) {
  if (argc < 2) {
    std::cerr << kUsageText;
    return kUsage;
  }
  const std::string cmd = argv[1];
  const Args args = parse_args(argc, argv, 2);
  if (args.bad) return usage_error(cmd + ": malformed flags");

  if (cmd == "pub") return do_pub(args);
  if (cmd == "sub") return do_sub(args);
  if (cmd == "run") return do_run(args);
  if (cmd == "sweep") return do_sweep(args);
  if (cmd == "report") return do_report(args);
  if (cmd == "broker") return do_broker(args);
  if (cmd == "fault-proxy") return do_fault_proxy(args);
  if (cmd == "help" || cmd == "--help" || cmd == "-h") {
    std::cout << kUsageText;
    return kOk;
  }
  return usage_error("unknown command: " + cmd);
}

}  // namespace mqbench::cli
