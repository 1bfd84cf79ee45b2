#include "mqbench/cli/report.hpp"

#include <cstdio>
#include <vector>

#include "mqbench/cli/formats.hpp"

namespace mqbench::cli {

namespace {

std::string fmt(const char* spec, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), spec, v);
  return buf;
}

std::string ms(std::int64_t ns) {
  return fmt("%.2f", static_cast<double>(ns) / 1e6) + " ms";
}

struct Row {
  std::vector<std::string> cells;
};

std::string align(const std::vector<Row>& rows) {
  std::vector<std::size_t> widths;
  for (const auto& row : rows) {
    if (widths.size() < row.cells.size()) widths.resize(row.cells.size());
    for (std::size_t i = 0; i < row.cells.size(); ++i) {
      widths[i] = std::max(widths[i], row.cells[i].size());
    }
  }
  std::string out;
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.cells.size(); ++i) {
      if (i) out += "  ";
      out += row.cells[i];
      if (i + 1 < row.cells.size()) {
        out.append(widths[i] - row.cells[i].size(), ' ');
      }
    }
    out += '\n';
  }
  return out;
}

}  // namespace

std::string render_json(const SummaryReport& report) {
  return summary_to_json(report);
}

std::string render_csv(std::span<const SummaryReport> reports) {
  std::string out =
      "scenario,transport,pairs,payload_bytes,qos,throughput_msg_s,p50_ms,"
      "p95_ms,p99_ms,loss_fraction,cpu_cores_mean,mem_mb_mean,degenerate\n";
  for (const auto& r : reports) {
    out += std::string(to_string(r.spec.scenario)) + ',' +
           to_string(r.spec.transport_kind) + ',' +
           std::to_string(r.spec.pairs) + ',' +
           std::to_string(r.spec.payload_bytes) + ',' +
           std::to_string(static_cast<int>(r.spec.qos)) + ',' +
           fmt("%.3f", r.throughput_msg_s) + ',' +
           fmt("%.3f", static_cast<double>(r.latency.p50_ns) / 1e6) + ',' +
           fmt("%.3f", static_cast<double>(r.latency.p95_ns) / 1e6) + ',' +
           fmt("%.3f", static_cast<double>(r.latency.p99_ns) / 1e6) + ',' +
           fmt("%.6f", r.loss_fraction) + ',' +
           fmt("%.3f", r.cpu_cores.mean) + ',' + fmt("%.1f", r.mem_mb.mean) +
           ',' + (r.degenerate ? "1" : "0") + '\n';
  }
  return out;
}

std::string render_table(std::span<const SummaryReport> reports) {
  std::vector<Row> rows;
  rows.push_back({{"Scenario", "Transport", "Throughput", "p50", "p95", "Loss",
                   "CPU", "Mem"}});
  for (const auto& r : reports) {
    Row row;
    row.cells = {to_string(r.spec.scenario),
                 to_string(r.spec.transport_kind),
                 fmt("%.1f", r.throughput_msg_s) + " msg/s",
                 ms(r.latency.p50_ns),
                 ms(r.latency.p95_ns),
                 fmt("%.2f", r.loss_fraction * 100.0) + " %",
                 fmt("%.2f", r.cpu_cores.mean) + " cores",
                 fmt("%.1f", r.mem_mb.mean) + " MB"};
    if (r.degenerate) row.cells.back() += " [DEGENERATE]";
    rows.push_back(std::move(row));
  }
  return align(rows);
}

}  // namespace mqbench::cli
