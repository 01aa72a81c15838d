#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "samdh/types.hpp"

namespace samdh {

enum class Metric : std::size_t {
  consumed_bytes,
  consumed_files,
  delivered_in_bytes,
  sent_out_bytes,
  mss_written_bytes,
  mss_read_bytes,
  remote_stream_bytes,
};
inline constexpr std::size_t kMetricCount = 7;

std::string_view to_string(Metric metric) noexcept;
std::optional<Metric> parse_metric(std::string_view text) noexcept;

/// What happened; each kind feeds one or two counters.
enum class LedgerEvent {
  consume,        // consumed_bytes + consumed_files
  deliver_in,     // delivered_in_bytes
  send_out,       // sent_out_bytes
  mss_write,      // mss_written_bytes
  mss_read,       // mss_read_bytes
  remote_stream,  // remote_stream_bytes
};

using Counters = std::array<std::uint64_t, kMetricCount>;

struct DailyRow {
  std::int64_t day = 0;
  std::string station;
  Counters counters{};
  std::string mult_factor;
};

struct StationSummary {
  std::string station;
  std::uint64_t consumed_bytes = 0;
  std::uint64_t delivered_in_bytes = 0;
  std::uint64_t remote_stream_bytes = 0;
  std::string mult_factor;
  /// Day with the most consumed bytes (earliest on ties); nullopt if idle.
  std::optional<std::int64_t> peak_day;
  std::string peak_mult_factor;
};

struct MetricsReport {
  std::int64_t first_day = 0;
  std::int64_t last_day = 0;
  std::vector<DailyRow> rows;  // ordered by (day, station)
  std::vector<StationSummary> summaries;
};

/// consumed / delivered as text: fixed 4 decimals, "∞" when nothing was
/// delivered but something consumed, "n/a" when both are zero.
std::string format_factor(std::uint64_t consumed, std::uint64_t delivered);
/// Numeric counterpart; +inf and NaN for the two sentinels.
double factor_value(std::uint64_t consumed, std::uint64_t delivered) noexcept;

/// Append-only counters keyed by (day, station, metric) with
/// day = floor(at / 86400).
class MetricsLedger {
public:
  /// Throws negative_amount if bytes or files is negative.
  void record(LedgerEvent kind, std::string_view station, std::int64_t bytes, std::int64_t files, SimTime at);

  std::uint64_t get(std::int64_t day, std::string_view station, Metric metric) const;
  std::uint64_t total(std::string_view station, Metric metric) const;
  /// Highest day with any record; nullopt for an empty ledger.
  std::optional<std::int64_t> last_day() const;
  std::vector<std::string> stations() const;
  bool empty() const noexcept { return buckets_.empty(); }

  MetricsReport report(const std::vector<std::string>& stations, std::int64_t first_day,
                       std::int64_t last_day) const;

private:
  std::map<std::pair<std::int64_t, std::string>, Counters, std::less<>> buckets_;
};

/// `day,station,consumed_bytes,consumed_files,delivered_in,sent_out,mss_written,mss_read,mult_factor`
void write_report_csv(const MetricsReport& report, std::ostream& out);
/// Two-column `day value` text for gnuplot bar charts.
void write_gnuplot_series(const MetricsReport& report, std::string_view station, Metric metric,
                          std::ostream& out);
/// Parses a file produced by write_report_csv (summaries are recomputed).
MetricsReport read_report_csv(std::istream& in);

}  // namespace samdh
