// samdh: validate, run and report desk-scale data-handling scenarios.

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "samdh/error.hpp"
#include "samdh/metrics.hpp"
#include "samdh/scenario.hpp"
#include "samdh/workload.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitFailure = 1;

samdh::RunOptions options_from(const std::optional<std::uint64_t>& seed, const std::optional<double>& until) {
  samdh::RunOptions options;
  options.seed = seed;
  options.until_days = until;
  return options;
}

int print_report(const std::filesystem::path& metrics_path, const std::string& station, const std::string& metric) {
  std::ifstream in(metrics_path);
  if (!in) throw samdh::Error(samdh::ErrorCode::io_error, "cannot read '" + metrics_path.string() + "'");
  const auto report = samdh::read_report_csv(in);
  if (!metric.empty()) {
    const auto m = samdh::parse_metric(metric);
    if (!m) throw samdh::Error(samdh::ErrorCode::invalid_argument, "unknown metric '" + metric + "'");
    if (station.empty()) throw samdh::Error(samdh::ErrorCode::invalid_argument, "--metric needs --station");
    samdh::write_gnuplot_series(report, station, *m, std::cout);
    return 0;
  }
  std::cout << "station,consumed_bytes,delivered_in,remote_stream,mult_factor,peak_day,peak_mult_factor\n";
  for (const auto& s : report.summaries) {
    if (!station.empty() && s.station != station) continue;
    std::cout << s.station << ',' << s.consumed_bytes << ',' << s.delivered_in_bytes << ','
              << s.remote_stream_bytes << ',' << s.mult_factor << ','
              << (s.peak_day ? std::to_string(*s.peak_day) : "") << ',' << s.peak_mult_factor << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Desk-scale simulator of a SAM-style distributed data handling system"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = "out";
  std::optional<std::uint64_t> seed;
  std::optional<double> until;
  bool quiet = false;

  auto* validate = app.add_subcommand("validate", "Parse and cross-check a scenario file");
  validate->add_option("--config", config_path, "Scenario JSON")->required();
  validate->add_flag("--quiet", quiet, "Print nothing on success");

  auto* run = app.add_subcommand("run", "Generate, replay and report a scenario");
  run->add_option("--config", config_path, "Scenario JSON")->required();
  run->add_option("--out", out_dir, "Output directory")->capture_default_str();
  run->add_option("--seed", seed, "Override the scenario seed");
  run->add_option("--until", until, "Stop after this many simulated days")->check(CLI::PositiveNumber);
  run->add_flag("--quiet", quiet, "Do not print the summary");

  auto* trace_gen = app.add_subcommand("trace-gen", "Write the generated trace without running it");
  trace_gen->add_option("--config", config_path, "Scenario JSON")->required();
  trace_gen->add_option("--out", out_dir, "Output directory")->capture_default_str();
  trace_gen->add_option("--seed", seed, "Override the scenario seed");
  trace_gen->add_option("--until", until, "Generate this many simulated days")->check(CLI::PositiveNumber);
  trace_gen->add_flag("--quiet", quiet, "Print nothing on success");

  std::string metrics_path;
  std::string station;
  std::string metric;
  auto* report = app.add_subcommand("report", "Summarize a metrics.csv, or print one gnuplot series");
  report->add_option("--metrics", metrics_path, "metrics.csv path (default: <out>/metrics.csv)");
  report->add_option("--out", out_dir, "Run output directory")->capture_default_str();
  report->add_option("--station", station, "Restrict to one station");
  report->add_option("--metric", metric, "Emit `day value` pairs of this metric for --station");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*report) {
      return print_report(metrics_path.empty() ? std::filesystem::path(out_dir) / "metrics.csv"
                                               : std::filesystem::path(metrics_path),
                          station, metric);
    }
    const auto config = samdh::load_scenario(config_path);
    if (*validate) {
      if (!quiet) std::cout << "ok: " << config.name << '\n';
      return 0;
    }
    const auto options = options_from(seed, until);
    if (*trace_gen) {
      const auto s = options.seed.value_or(config.seed);
      const double days = options.until_days.value_or(config.duration_days);
      const auto grid = samdh::build_grid(config, s);
      const auto trace = samdh::generate_trace(config, *grid, s, days);
      std::filesystem::create_directories(out_dir);
      const auto path = std::filesystem::path(out_dir) / "trace.csv";
      std::ofstream out(path, std::ios::binary | std::ios::trunc);
      samdh::write_trace(trace, out);
      if (!out) throw samdh::Error(samdh::ErrorCode::io_error, "cannot write '" + path.string() + "'");
      if (!quiet) std::cout << trace.size() << " records -> " << path.string() << '\n';
      return 0;
    }
    const auto outputs = samdh::run_scenario(config, options);
    samdh::write_outputs(outputs, out_dir);
    if (!quiet) std::cout << outputs.summary_txt;
    return outputs.audit.ok ? 0 : kExitFailure;
  } catch (const samdh::Error& e) {
    std::cerr << samdh::error_json(e) << '\n';
    return e.code() == samdh::ErrorCode::config_invalid ? kExitConfig : kExitFailure;
  } catch (const std::exception& e) {
    std::cerr << nlohmann::json{{"error", "Internal"}, {"message", e.what()}}.dump() << '\n';
    return kExitFailure;
  }
}
