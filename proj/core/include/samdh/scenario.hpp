#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "samdh/catalog.hpp"
#include "samdh/error.hpp"
#include "samdh/fabric.hpp"
#include "samdh/grid.hpp"
#include "samdh/metrics.hpp"
#include "samdh/mss.hpp"
#include "samdh/simkernel.hpp"
#include "samdh/station.hpp"
#include "samdh/workload.hpp"

namespace samdh {

struct LinkConfig {
  std::string a;  // node ids, or domains in a domain link
  std::string b;
  LinkSpec spec;
};

struct RouteConfig {
  std::string station;
  std::string destination;  // node id, domain, or "*"
  std::string next_hop;
  bool cache_in_transit = false;
};

struct MssConfig {
  TapeLibraryConfig library;
  std::string domain;
};

/// `count` files named `<prefix>-000001`... declared at `declared_at`.
struct FileSetConfig {
  std::string prefix;
  std::size_t count = 0;
  Bytes size_bytes = 0;
  Tier tier = Tier::raw;
  SimTime declared_at = 0.0;
  std::optional<std::string> archive_to;
  std::vector<std::string> cached_at;
};

struct DatasetConfig {
  std::string name;
  std::optional<Tier> tier;
  std::optional<std::string> name_glob;
  std::optional<SimTime> declared_from;
  std::optional<SimTime> declared_to;
  std::optional<std::string> has_parent;    // logical name
  std::optional<std::vector<std::string>> members;
};

struct WorkloadConfig {
  std::string name;
  WorkloadKind kind = WorkloadKind::analysis;
  std::string station;
  std::string group;
  std::string dataset;
  double reuse_skew = 0.0;
  double arrival_rate = 1.0;
  std::uint32_t consumers = 1;
  SimTime think_time = 1.0;
  std::size_t files_per_project = 0;
  double start_day = 0.0;
  std::optional<double> duration_days;  // defaults to the run length
  std::string archive;
  Bytes file_size = 0;
};

/// One scenario document (JSON, `schema: 1`).
struct ScenarioConfig {
  std::string name;
  std::uint64_t seed = 1;
  double duration_days = 1.0;
  std::uint32_t retry_budget = 2;
  double corruption_probability = 0.0;
  LinkSpec default_link{10e6, 0.05};
  std::vector<LinkConfig> domain_links;
  std::vector<LinkConfig> links;
  std::vector<StationConfig> stations;
  std::vector<MssConfig> mss;
  std::vector<RouteConfig> routes;
  std::vector<FileSetConfig> files;
  std::optional<std::filesystem::path> catalog_csv;  // resolved against the document's directory
  std::optional<std::string> catalog_archive;
  std::vector<DatasetConfig> datasets;
  std::vector<WorkloadConfig> workloads;
};

/// Parses and validates. Throws ConfigError with the offending field path;
/// unknown keys are errors.
ScenarioConfig parse_scenario(const std::string& json_text, const std::filesystem::path& base_dir = {});
/// Throws io_error or ConfigError.
ScenarioConfig load_scenario(const std::filesystem::path& path);
/// Cross-reference checks; parse_scenario already calls this.
void validate(const ScenarioConfig& config);

/// `{"error": code, "field": path, "message": text}`.
std::string error_json(const Error& error);

struct RunOptions {
  std::optional<std::uint64_t> seed;   // overrides the config
  std::optional<double> until_days;    // overrides duration_days
};

/// Deployment with stations, archives, routes, links and the initial
/// catalog in place, at time zero.
std::unique_ptr<Grid> build_grid(const ScenarioConfig& config, std::uint64_t seed);

/// All workloads merged into one sorted trace. Workload i is seeded from
/// mix64(seed + i + 1).
std::vector<TraceRecord> generate_trace(const ScenarioConfig& config, const Grid& grid, std::uint64_t seed,
                                        double days);

struct RunOutputs {
  std::string trace_csv;
  std::string transfers_csv;
  std::string mss_csv;
  std::string metrics_csv;
  std::string projects_csv;
  std::string summary_txt;
  MetricsReport report;
  AuditReport audit;
  ReplayStats replay;
  RunStats kernel;
  std::uint64_t transfers = 0;
  std::uint64_t retried_transfers = 0;
  std::uint64_t failed_transfers = 0;
  std::uint64_t corrupted_attempts = 0;
};

/// generate -> replay -> report, entirely in memory.
RunOutputs run_scenario(const ScenarioConfig& config, const RunOptions& options = {});

/// Writes the fixed output file set into `dir` (created if needed). Throws
/// io_error.
void write_outputs(const RunOutputs& outputs, const std::filesystem::path& dir);

}  // namespace samdh
