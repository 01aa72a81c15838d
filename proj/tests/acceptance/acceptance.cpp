// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "samdh/crc32.hpp"
#include "samdh/grid.hpp"
#include "samdh/metrics.hpp"
#include "samdh/route_table.hpp"
#include "samdh/scenario.hpp"

namespace {

using namespace samdh;
namespace fs = std::filesystem;

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void report(int number, const std::string& title, const Outcome& o) {
  std::printf("%s [%d] %s: %s\n", o.pass ? "PASS" : "FAIL", number, title.c_str(), o.detail.c_str());
  std::fflush(stdout);
  if (!o.pass) ++failures;
}

Outcome guarded(const std::function<Outcome()>& body) {
  try {
    return body();
  } catch (const std::exception& e) {
    return {false, std::string("exception: ") + e.what()};
  }
}

fs::path scenario_dir() { return fs::path(SAMDH_SCENARIO_DIR); }

struct TimedRun {
  RunOutputs out;
  double seconds = 0.0;
};

TimedRun timed_run(const ScenarioConfig& config) {
  const auto t0 = std::chrono::steady_clock::now();
  TimedRun r{run_scenario(config), 0.0};
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

std::string num(double v, int decimals = 3) {
  if (std::isinf(v)) return "inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  return buf;
}

std::uint64_t sum_metric(const MetricsReport& r, const std::string& station, Metric m) {
  std::uint64_t s = 0;
  for (const auto& row : r.rows) {
    if (station.empty() || row.station == station) s += row.counters[static_cast<std::size_t>(m)];
  }
  return s;
}

Outcome analysis_factor() {
  const auto config = load_scenario(scenario_dir() / "analysis.json");
  const auto& st = config.stations.at(0);
  Bytes working_set = 0;
  for (const auto& f : config.files) working_set += f.size_bytes * f.count;
  const auto& wl = config.workloads.at(0);
  const bool setup = st.cache.quota == 14'000'000'000ULL && working_set <= st.cache.quota &&
                     std::abs(wl.reuse_skew - 0.8) < 1e-12 && config.duration_days == 30.0;

  const auto run = timed_run(config);
  const DailyRow* peak = nullptr;
  for (const auto& row : run.out.report.rows) {
    if (row.station != st.id) continue;
    const auto c = row.counters[static_cast<std::size_t>(Metric::consumed_bytes)];
    if (c > 0 && (!peak || c > peak->counters[static_cast<std::size_t>(Metric::consumed_bytes)])) peak = &row;
  }
  if (!peak) return {false, "no consumption at " + st.id};
  const double peak_factor = factor_value(peak->counters[static_cast<std::size_t>(Metric::consumed_bytes)],
                                          peak->counters[static_cast<std::size_t>(Metric::delivered_in_bytes)]);
  const double avg = factor_value(sum_metric(run.out.report, st.id, Metric::consumed_bytes),
                                  sum_metric(run.out.report, st.id, Metric::delivered_in_bytes));
  const bool pass = setup && peak_factor >= 2.0 && avg >= 1.5 && run.seconds < 60.0;
  return {pass, "peak day " + std::to_string(peak->day) + " factor " + num(peak_factor) + " (>= 2.0), average " +
                    num(avg) + " (>= 1.5), working set " + std::to_string(working_set) + " <= cache " +
                    std::to_string(st.cache.quota) + ", runtime " + num(run.seconds) + " s (< 60)"};
}

Outcome reconstruction_ratio() {
  const auto config = load_scenario(scenario_dir() / "reconstruction.json");
  const auto run = timed_run(config);
  const auto& id = config.stations.at(0).id;
  const auto consumed = sum_metric(run.out.report, id, Metric::consumed_bytes);
  const auto delivered = sum_metric(run.out.report, id, Metric::delivered_in_bytes);
  const double ratio = factor_value(consumed, delivered);
  const bool pass = delivered > 0 && ratio >= 0.85 && ratio <= 1.0 && run.seconds < 30.0;
  return {pass, "consumed " + std::to_string(consumed) + " / delivered " + std::to_string(delivered) + " = " +
                    num(ratio, 4) + " (in [0.85, 1.0]), runtime " + num(run.seconds) + " s (< 30)"};
}

Outcome mss_asymmetry() {
  const auto config = load_scenario(scenario_dir() / "mss_balance.json");
  const auto run = timed_run(config);
  const auto read = sum_metric(run.out.report, "", Metric::mss_read_bytes);
  const auto written = sum_metric(run.out.report, "", Metric::mss_written_bytes);
  const double days = static_cast<double>(run.out.report.last_day - run.out.report.first_day + 1);
  const double ratio = written > 0 ? static_cast<double>(read) / static_cast<double>(written) : 0.0;
  const bool pass = written > 0 && days >= 30.0 && ratio >= 1.4 && ratio <= 2.6;
  return {pass, "daily read " + num(static_cast<double>(read) / days / 1e9) + " GB vs written " +
                    num(static_cast<double>(written) / days / 1e9) + " GB over " + num(days, 0) +
                    " days, ratio " + num(ratio) + " (2.0 +- 30%)"};
}

// A station pulls every file of a large project from its peer while each
// transfer attempt is corrupted with probability 0.01.
Outcome integrity() {
  constexpr std::size_t kFiles = 12'000;
  constexpr Bytes kSize = 1'000;
  Grid grid(20260101);
  grid.fabric().set_default_link({1e9, 0.001});
  grid.set_fault_profile(FaultProfile::uniform(0.01));
  grid.add_station(fixture::station("local", "home", 200 * kSize, 8, 4));
  grid.add_station(fixture::station("peer", "away", kFiles * kSize));
  grid.routes().add_route("local", "*", "peer");
  grid.routes().add_route("peer", "home", "local");
  std::vector<FileId> files;
  for (std::size_t i = 0; i < kFiles; ++i) files.push_back(fixture::cached(grid, "peer", "f" + std::to_string(i), kSize));

  auto& local = grid.station("local");
  const auto& log = grid.fabric().log();
  std::map<FileId, std::size_t> last_in;  // file -> latest transfer into local
  std::size_t scanned = 0;
  std::size_t delivered = 0;
  std::size_t bad_deliveries = 0;
  std::size_t failed = 0;
  const std::uint32_t consumers = 8;
  const auto project = local.start_project_with_files(files, "g", consumers, 0.5);
  std::function<void(std::uint32_t)> ask = [&](std::uint32_t c) {
    local.next_file(project, c, [&, c](const Delivery& d) {
      if (d.end_of_stream) return;
      if (d.failed) {
        ++failed;
        grid.kernel().schedule(0.0, [&, c] { ask(c); });
        return;
      }
      for (; scanned < log.size(); ++scanned) {
        if (log[scanned].dst == "local") last_in[log[scanned].file] = scanned;
      }
      ++delivered;
      const auto it = last_in.find(d.file);
      if (it == last_in.end() || !log[it->second].delivered() ||
          log[it->second].crc_at_dst != grid.catalog().file(d.file).crc) {
        ++bad_deliveries;
      }
    }, [&, c](const Delivery& d) {
      local.release_file(project, c, d.file);
      ask(c);
    });
  };
  for (std::uint32_t c = 0; c < consumers; ++c) ask(c);
  grid.kernel().run();

  std::uint64_t expected_corruptions = 0;
  std::size_t retried = 0;
  std::size_t exhausted = 0;
  std::size_t inconsistent = 0;
  for (const auto& e : log) {
    switch (e.verdict) {
      case Verdict::ok:
        if (e.attempts != 1 || e.crc_at_dst != e.crc_at_src) ++inconsistent;
        break;
      case Verdict::retried:
        ++retried;
        if (e.attempts < 2 || e.crc_at_dst != e.crc_at_src) ++inconsistent;
        expected_corruptions += e.attempts - 1;
        break;
      case Verdict::corrupted:
        ++exhausted;
        if (e.crc_at_dst == e.crc_at_src) ++inconsistent;
        expected_corruptions += e.attempts;
        break;
    }
  }
  const auto corruptions = grid.fabric().corrupted_attempts();
  const bool pass = log.size() >= 10'000 && bad_deliveries == 0 && inconsistent == 0 &&
                    corruptions == expected_corruptions && corruptions > 0 &&
                    delivered + failed == kFiles && grid.audit().ok;
  return {pass, std::to_string(log.size()) + " transfers, " + std::to_string(corruptions) +
                    " corrupted attempts all accounted for by " + std::to_string(retried) + " retried + " +
                    std::to_string(exhausted) + " corrupted events, " + std::to_string(delivered) +
                    " deliveries with " + std::to_string(bad_deliveries) + " CRC mismatches"};
}

Outcome cache_invariants() {
  std::size_t mismatches = 0, quota = 0, pinned = 0, evictions = 0;
  std::string first;
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    const auto r = oracle::cache_property_run(seed, 10'000);
    mismatches += r.mismatches;
    quota += r.quota_violations;
    pinned += r.pinned_evictions;
    evictions += r.evictions;
    if (first.empty() && !r.first_problem.empty()) first = "seed " + std::to_string(seed) + " " + r.first_problem;
  }
  const bool pass = mismatches == 0 && quota == 0 && pinned == 0 && evictions > 0;
  return {pass, "100 seeds x 10^4 ops, " + std::to_string(evictions) + " evictions, " +
                    std::to_string(mismatches) + " oracle mismatches, " + std::to_string(quota) +
                    " quota violations, " + std::to_string(pinned) + " pinned evictions" +
                    (first.empty() ? "" : " (" + first + ")")};
}

Outcome routing_oracle() {
  std::size_t pairs = 0, wrong = 0, routed = 0;
  for (std::uint64_t seed = 1; seed <= 200; ++seed) {
    RouteTable table;
    oracle::NextHopModel model;
    oracle::random_routes(seed * 7919, 20, table, model);
    if (model.has_cycle()) ++wrong;
    for (const auto& [src, sd] : model.domain) {
      for (const auto& [dst, dd] : model.domain) {
        ++pairs;
        const auto expected = model.bfs_path(src, dst);
        std::optional<std::vector<std::string>> got;
        try {
          got = table.compute_path(src, dst);
        } catch (const Error& e) {
          if (e.code() != ErrorCode::no_route) throw;
        }
        if (got != expected) ++wrong;
        if (got) ++routed;
      }
    }
  }
  return {wrong == 0, "200 tables, " + std::to_string(pairs) + " pairs (" + std::to_string(routed) +
                          " routed), " + std::to_string(wrong) + " differences from BFS"};
}

struct ScenarioRuns {
  std::vector<std::string> names;
  std::vector<RunOutputs> first;
  std::vector<RunOutputs> second;
};

ScenarioRuns& all_runs() {
  static ScenarioRuns runs = [] {
    ScenarioRuns r;
    std::vector<fs::path> paths;
    for (const auto& entry : fs::directory_iterator(scenario_dir())) {
      if (entry.path().extension() == ".json") paths.push_back(entry.path());
    }
    std::sort(paths.begin(), paths.end());
    for (const auto& p : paths) {
      const auto config = load_scenario(p);
      r.names.push_back(p.stem().string());
      r.first.push_back(run_scenario(config));
      r.second.push_back(run_scenario(config));
    }
    return r;
  }();
  return runs;
}

Outcome determinism() {
  const auto& runs = all_runs();
  std::vector<std::string> differing;
  for (std::size_t i = 0; i < runs.names.size(); ++i) {
    if (runs.first[i].metrics_csv != runs.second[i].metrics_csv ||
        runs.first[i].transfers_csv != runs.second[i].transfers_csv) {
      differing.push_back(runs.names[i]);
    }
  }
  std::string names;
  for (const auto& n : runs.names) names += (names.empty() ? "" : ",") + n;
  std::string detail = std::to_string(runs.names.size()) + " scenarios (" + names + ") run twice, ";
  detail += differing.empty() ? "metrics.csv and transfers.csv byte-identical"
                              : std::to_string(differing.size()) + " differ";
  return {!runs.names.empty() && differing.empty(), detail};
}

Outcome fair_share() {
  const std::vector<std::map<std::string, double>> splits = {
      {{"a", 0.5}, {"b", 0.5}}, {{"a", 0.7}, {"b", 0.3}}, {{"a", 0.8}, {"b", 0.2}}};
  double worst = 0.0;
  std::size_t runs = 0;
  for (const auto& shares : splits) {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
      worst = std::max(worst, oracle::fair_share_run(seed, 1000, shares).worst_relative_error);
      ++runs;
    }
  }
  return {worst <= 0.10, std::to_string(runs) + " two-group runs of 10^3 admissions, worst deviation " +
                             num(100.0 * worst, 2) + "% of quota*share (<= 10%)"};
}

Outcome audits() {
  const auto& runs = all_runs();
  std::size_t checks = 0;
  std::vector<std::string> failing;
  for (std::size_t i = 0; i < runs.names.size(); ++i) {
    for (const auto* out : {&runs.first[i], &runs.second[i]}) {
      checks += out->audit.checks;
      if (!out->audit.ok) {
        failing.push_back(runs.names[i] + ": " + (out->audit.failures.empty() ? "?" : out->audit.failures[0]));
      }
    }
  }
  std::string detail = std::to_string(runs.names.size()) + " scenarios, " + std::to_string(checks) + " checks";
  if (!failing.empty()) detail += ", failing " + failing.front();
  return {!runs.names.empty() && failing.empty(), detail};
}

}  // namespace

int main() {
  report(1, "analysis multiplication factor", guarded(analysis_factor));
  report(2, "reconstruction ratio", guarded(reconstruction_ratio));
  report(3, "mss read/write asymmetry", guarded(mss_asymmetry));
  report(4, "integrity under fault injection", guarded(integrity));
  report(5, "cache invariants", guarded(cache_invariants));
  report(6, "routing oracle", guarded(routing_oracle));
  report(7, "determinism", guarded(determinism));
  report(8, "fair share", guarded(fair_share));
  report(9, "conservation audits", guarded(audits));
  std::printf("%d of 9 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
