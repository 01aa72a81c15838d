#pragma once

#include <cstdint>
#include <deque>
#include <istream>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "samdh/catalog.hpp"
#include "samdh/types.hpp"

namespace samdh {

class Grid;

enum class WorkloadKind { analysis, reconstruction, mc_import };

std::string_view to_string(WorkloadKind kind) noexcept;
std::optional<WorkloadKind> parse_workload_kind(std::string_view text) noexcept;

struct WorkloadProfile {
  std::string name;  // prefix of project labels and imported file names
  WorkloadKind kind = WorkloadKind::analysis;
  std::string station_id;
  std::string group;
  DatasetId file_population;
  double reuse_skew = 0.0;       // Zipf exponent, analysis only
  double arrival_rate = 1.0;     // projects (mc_import: files) per day
  std::uint32_t consumers_per_project = 1;
  SimTime think_time = 1.0;      // seconds per file
  double duration = 1.0;         // days
  std::uint64_t seed = 0;
  /// Analysis: Zipf draws per project (with replacement, then deduplicated).
  /// Reconstruction: chunk length; 0 processes the whole population in one
  /// project.
  std::size_t files_per_project = 0;
  SimTime start = 0.0;           // seconds; first possible arrival
  // mc_import
  std::string archive;
  Bytes file_size = 0;
};

enum class TraceAction { start_project, next_file, release_file, import_file };

std::string_view to_string(TraceAction action) noexcept;
std::optional<TraceAction> parse_trace_action(std::string_view text) noexcept;

/// One line of a trace. Column use by action:
///   start_project  project=label, consumer=consumer count, extra=
///                  `group=G;think=T;files=id id ...`
///   next_file      project, consumer, file=nominal file id
///   release_file   project, consumer, file=nominal file id
///   import_file    station=source, file=logical name, extra=`size=N;archive=M`
/// Times are whole milliseconds.
struct TraceRecord {
  SimTime t = 0.0;
  TraceAction action = TraceAction::start_project;
  std::string station;
  std::string project;
  std::uint32_t consumer = 0;
  std::string file;
  std::string extra;

  friend bool operator==(const TraceRecord&, const TraceRecord&) = default;
};

/// Rounds to the trace resolution (1 ms).
SimTime quantize(SimTime t) noexcept;

/// Sort key: time, then start < release < next < import, then the
/// remaining columns. Sorting any permutation of a trace yields the same
/// sequence.
bool trace_order(const TraceRecord& a, const TraceRecord& b);
void sort_trace(std::vector<TraceRecord>& trace);

/// Throws empty_dataset for analysis/reconstruction over an empty snapshot.
std::vector<TraceRecord> generate(const WorkloadProfile& profile, const std::vector<FileId>& snapshot);
std::vector<TraceRecord> generate(const WorkloadProfile& profile, const Catalog& catalog);

/// Indices into `snapshot` drawn by inverse-CDF Zipf(s) rank sampling,
/// rank 1 being snapshot[0].
class ZipfSampler {
public:
  ZipfSampler(std::size_t n, double s);
  std::size_t sample(double u) const;  // u in [0, 1)
  double probability(std::size_t index) const;

private:
  std::vector<double> cdf_;
};

void write_trace(const std::vector<TraceRecord>& trace, std::ostream& out);
/// Throws parse_error with the line number.
std::vector<TraceRecord> read_trace(std::istream& in);

/// key=value pairs of the extra column.
std::map<std::string, std::string, std::less<>> parse_extra(std::string_view extra);

struct ReplayStats {
  std::uint64_t records = 0;
  std::uint64_t projects_started = 0;
  std::uint64_t files_delivered = 0;
  std::uint64_t files_released = 0;
  std::uint64_t failed_deliveries = 0;
  std::uint64_t imports_started = 0;
  std::uint64_t imports_archived = 0;
  std::uint64_t imports_failed = 0;
};

/// Drives a grid from a trace. start_project and import_file fire at their
/// timestamps; next_file and release_file form one ordered plan per
/// consumer, where a timestamp is the earliest start and a step also waits
/// for the consumer (next_file needs it idle, release_file needs the held
/// file consumed). The station chooses which file is delivered.
class Replayer {
public:
  explicit Replayer(Grid& grid);
  ~Replayer();
  Replayer(const Replayer&) = delete;
  Replayer& operator=(const Replayer&) = delete;

  /// Checks every reference, sorts, and schedules. Throws unknown_entity
  /// naming the record index.
  void load(std::vector<TraceRecord> trace);
  const ReplayStats& stats() const noexcept { return stats_; }
  /// Project label -> station project id for started projects.
  const std::map<std::string, std::string>& project_ids() const noexcept { return project_ids_; }

private:
  struct Cursor;
  void start(const TraceRecord& rec);
  void import(const TraceRecord& rec);
  void advance(const std::shared_ptr<Cursor>& cursor);

  Grid& grid_;
  ReplayStats stats_;
  std::map<std::string, std::string> project_ids_;
  std::map<std::pair<std::string, std::uint32_t>, std::shared_ptr<Cursor>> cursors_;
};

}  // namespace samdh
