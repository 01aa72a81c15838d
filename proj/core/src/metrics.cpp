#include "samdh/metrics.hpp"

#include <cmath>
#include <istream>
#include <limits>
#include <set>

#include "samdh/error.hpp"
#include "text.hpp"

namespace samdh {

namespace {

constexpr std::array<std::string_view, kMetricCount> kMetricNames = {
    "consumed_bytes", "consumed_files", "delivered_in_bytes", "sent_out_bytes",
    "mss_written_bytes", "mss_read_bytes", "remote_stream_bytes"};

std::size_t idx(Metric m) { return static_cast<std::size_t>(m); }

void summarize(MetricsReport& report) {
  std::map<std::string, StationSummary> by_station;
  std::map<std::string, std::uint64_t> peak_consumed;
  for (const auto& row : report.rows) {
    auto& s = by_station[row.station];
    s.station = row.station;
    const auto consumed = row.counters[idx(Metric::consumed_bytes)];
    s.consumed_bytes += consumed;
    s.delivered_in_bytes += row.counters[idx(Metric::delivered_in_bytes)];
    s.remote_stream_bytes += row.counters[idx(Metric::remote_stream_bytes)];
    if (consumed > 0 && (!s.peak_day || consumed > peak_consumed[row.station])) {
      s.peak_day = row.day;
      peak_consumed[row.station] = consumed;
      s.peak_mult_factor = row.mult_factor;
    }
  }
  report.summaries.clear();
  for (auto& [name, s] : by_station) {
    s.mult_factor = format_factor(s.consumed_bytes, s.delivered_in_bytes);
    if (!s.peak_day) s.peak_mult_factor = "n/a";
    report.summaries.push_back(std::move(s));
  }
}

}  // namespace

std::string_view to_string(Metric metric) noexcept { return kMetricNames[idx(metric)]; }

std::optional<Metric> parse_metric(std::string_view text) noexcept {
  for (std::size_t i = 0; i < kMetricCount; ++i) {
    if (kMetricNames[i] == text) return static_cast<Metric>(i);
  }
  return std::nullopt;
}

std::string format_factor(std::uint64_t consumed, std::uint64_t delivered) {
  if (delivered == 0) return consumed > 0 ? "∞" : "n/a";
  return detail::fixed(static_cast<double>(consumed) / static_cast<double>(delivered), 4);
}

double factor_value(std::uint64_t consumed, std::uint64_t delivered) noexcept {
  if (delivered == 0) {
    return consumed > 0 ? std::numeric_limits<double>::infinity() : std::numeric_limits<double>::quiet_NaN();
  }
  return static_cast<double>(consumed) / static_cast<double>(delivered);
}

void MetricsLedger::record(LedgerEvent kind, std::string_view station, std::int64_t bytes, std::int64_t files,
                           SimTime at) {
  if (bytes < 0 || files < 0) {
    throw Error(ErrorCode::negative_amount, "negative amount recorded for '" + std::string(station) + "'");
  }
  if (!(at >= 0.0)) throw Error(ErrorCode::invalid_argument, "record time must be >= 0");
  const auto day = static_cast<std::int64_t>(std::floor(at / kSecondsPerDay));
  Counters& c = buckets_[{day, std::string(station)}];
  const auto b = static_cast<std::uint64_t>(bytes);
  switch (kind) {
    case LedgerEvent::consume:
      c[idx(Metric::consumed_bytes)] += b;
      c[idx(Metric::consumed_files)] += static_cast<std::uint64_t>(files);
      break;
    case LedgerEvent::deliver_in: c[idx(Metric::delivered_in_bytes)] += b; break;
    case LedgerEvent::send_out: c[idx(Metric::sent_out_bytes)] += b; break;
    case LedgerEvent::mss_write: c[idx(Metric::mss_written_bytes)] += b; break;
    case LedgerEvent::mss_read: c[idx(Metric::mss_read_bytes)] += b; break;
    case LedgerEvent::remote_stream: c[idx(Metric::remote_stream_bytes)] += b; break;
  }
}

std::uint64_t MetricsLedger::get(std::int64_t day, std::string_view station, Metric metric) const {
  auto it = buckets_.find(std::pair<std::int64_t, std::string>{day, std::string(station)});
  return it == buckets_.end() ? 0 : it->second[idx(metric)];
}

std::uint64_t MetricsLedger::total(std::string_view station, Metric metric) const {
  std::uint64_t sum = 0;
  for (const auto& [key, c] : buckets_) {
    if (key.second == station) sum += c[idx(metric)];
  }
  return sum;
}

std::optional<std::int64_t> MetricsLedger::last_day() const {
  std::optional<std::int64_t> last;
  for (const auto& [key, c] : buckets_) {
    if (!last || key.first > *last) last = key.first;
  }
  return last;
}

std::vector<std::string> MetricsLedger::stations() const {
  std::set<std::string> names;
  for (const auto& [key, c] : buckets_) names.insert(key.second);
  return {names.begin(), names.end()};
}

MetricsReport MetricsLedger::report(const std::vector<std::string>& stations, std::int64_t first_day,
                                    std::int64_t last_day) const {
  if (last_day < first_day) throw Error(ErrorCode::invalid_argument, "report day range is empty");
  std::set<std::string> ordered(stations.begin(), stations.end());
  MetricsReport report;
  report.first_day = first_day;
  report.last_day = last_day;
  for (std::int64_t day = first_day; day <= last_day; ++day) {
    for (const auto& station : ordered) {
      DailyRow row;
      row.day = day;
      row.station = station;
      auto it = buckets_.find(std::pair<std::int64_t, std::string>{day, station});
      if (it != buckets_.end()) row.counters = it->second;
      row.mult_factor =
          format_factor(row.counters[idx(Metric::consumed_bytes)], row.counters[idx(Metric::delivered_in_bytes)]);
      report.rows.push_back(std::move(row));
    }
  }
  summarize(report);
  return report;
}

void write_report_csv(const MetricsReport& report, std::ostream& out) {
  out << "day,station,consumed_bytes,consumed_files,delivered_in,sent_out,mss_written,mss_read,mult_factor\n";
  for (const auto& r : report.rows) {
    const auto& c = r.counters;
    out << r.day << ',' << r.station << ',' << c[idx(Metric::consumed_bytes)] << ','
        << c[idx(Metric::consumed_files)] << ',' << c[idx(Metric::delivered_in_bytes)] << ','
        << c[idx(Metric::sent_out_bytes)] << ',' << c[idx(Metric::mss_written_bytes)] << ','
        << c[idx(Metric::mss_read_bytes)] << ',' << r.mult_factor << '\n';
  }
}

void write_gnuplot_series(const MetricsReport& report, std::string_view station, Metric metric,
                          std::ostream& out) {
  out << "# day " << to_string(metric) << " station=" << station << '\n';
  for (const auto& r : report.rows) {
    if (r.station == station) out << r.day << ' ' << r.counters[idx(metric)] << '\n';
  }
}

MetricsReport read_report_csv(std::istream& in) {
  MetricsReport report;
  std::string line;
  std::size_t line_no = 0;
  bool first = true;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (first) {
      first = false;
      if (line.rfind("day,", 0) == 0) continue;
    }
    auto cols = detail::split(line, ',');
    if (cols.size() != 9) throw Error(ErrorCode::parse_error, "metrics line " + std::to_string(line_no));
    DailyRow row;
    auto day = detail::parse_number<std::int64_t>(cols[0]);
    if (!day) throw Error(ErrorCode::parse_error, "metrics line " + std::to_string(line_no) + ": bad day");
    row.day = *day;
    row.station = cols[1];
    const Metric order[] = {Metric::consumed_bytes,    Metric::consumed_files, Metric::delivered_in_bytes,
                            Metric::sent_out_bytes,    Metric::mss_written_bytes, Metric::mss_read_bytes};
    for (std::size_t i = 0; i < 6; ++i) {
      auto v = detail::parse_number<std::uint64_t>(cols[2 + i]);
      if (!v) throw Error(ErrorCode::parse_error, "metrics line " + std::to_string(line_no) + ": bad counter");
      row.counters[idx(order[i])] = *v;
    }
    row.mult_factor = cols[8];
    if (report.rows.empty() || row.day < report.first_day) report.first_day = row.day;
    if (report.rows.empty() || row.day > report.last_day) report.last_day = row.day;
    report.rows.push_back(std::move(row));
  }
  summarize(report);
  return report;
}

}  // namespace samdh
