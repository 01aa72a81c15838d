#include "samdh/workload.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>
#include <tuple>

#include "samdh/crc32.hpp"
#include "samdh/error.hpp"
#include "samdh/grid.hpp"
#include "samdh/rng.hpp"
#include "text.hpp"

namespace samdh {

std::string_view to_string(WorkloadKind kind) noexcept {
  switch (kind) {
    case WorkloadKind::analysis: return "analysis";
    case WorkloadKind::reconstruction: return "reconstruction";
    case WorkloadKind::mc_import: return "mc_import";
  }
  return "?";
}

std::optional<WorkloadKind> parse_workload_kind(std::string_view text) noexcept {
  if (text == "analysis") return WorkloadKind::analysis;
  if (text == "reconstruction") return WorkloadKind::reconstruction;
  if (text == "mc_import") return WorkloadKind::mc_import;
  return std::nullopt;
}

std::string_view to_string(TraceAction action) noexcept {
  switch (action) {
    case TraceAction::start_project: return "start_project";
    case TraceAction::next_file: return "next_file";
    case TraceAction::release_file: return "release_file";
    case TraceAction::import_file: return "import_file";
  }
  return "?";
}

std::optional<TraceAction> parse_trace_action(std::string_view text) noexcept {
  if (text == "start_project") return TraceAction::start_project;
  if (text == "next_file") return TraceAction::next_file;
  if (text == "release_file") return TraceAction::release_file;
  if (text == "import_file") return TraceAction::import_file;
  return std::nullopt;
}

SimTime quantize(SimTime t) noexcept { return std::round(t * 1000.0) / 1000.0; }

namespace {

int rank(TraceAction action) {
  switch (action) {
    case TraceAction::start_project: return 0;
    case TraceAction::release_file: return 1;
    case TraceAction::next_file: return 2;
    case TraceAction::import_file: return 3;
  }
  return 4;
}

std::string label(std::string_view prefix, std::size_t index, int width) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "-%0*zu", width, index);
  return std::string(prefix) + buf;
}

// Start record plus the nominal per-consumer next/release plan.
void emit_project(std::vector<TraceRecord>& out, const WorkloadProfile& profile, SimTime t,
                  const std::string& project, const std::vector<FileId>& files) {
  std::string extra = "group=" + profile.group + ";think=" + detail::fixed(profile.think_time) + ";files=";
  for (std::size_t i = 0; i < files.size(); ++i) {
    if (i) extra += ' ';
    extra += to_string(files[i]);
  }
  const std::uint32_t consumers = profile.consumers_per_project;
  out.push_back({t, TraceAction::start_project, profile.station_id, project, consumers, "", std::move(extra)});
  for (std::size_t i = 0; i < files.size(); ++i) {
    const auto consumer = static_cast<std::uint32_t>(i % consumers);
    const SimTime begin = t + static_cast<double>(i / consumers) * profile.think_time;
    const std::string file = to_string(files[i]);
    out.push_back({quantize(begin), TraceAction::next_file, profile.station_id, project, consumer, file, ""});
    out.push_back({quantize(begin + profile.think_time), TraceAction::release_file, profile.station_id, project,
                   consumer, file, ""});
  }
}

}  // namespace

bool trace_order(const TraceRecord& a, const TraceRecord& b) {
  return std::forward_as_tuple(a.t, rank(a.action), a.station, a.project, a.consumer, a.file, a.extra) <
         std::forward_as_tuple(b.t, rank(b.action), b.station, b.project, b.consumer, b.file, b.extra);
}

void sort_trace(std::vector<TraceRecord>& trace) { std::stable_sort(trace.begin(), trace.end(), trace_order); }

ZipfSampler::ZipfSampler(std::size_t n, double s) {
  if (n == 0) throw Error(ErrorCode::empty_dataset, "zipf sampler over zero items");
  if (!(s >= 0.0)) throw Error(ErrorCode::invalid_argument, "zipf exponent must be >= 0");
  cdf_.resize(n);
  double total = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    total += 1.0 / std::pow(static_cast<double>(k + 1), s);
    cdf_[k] = total;
  }
  for (double& c : cdf_) c /= total;
  cdf_.back() = 1.0;
}

std::size_t ZipfSampler::sample(double u) const {
  const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
  return std::min<std::size_t>(static_cast<std::size_t>(it - cdf_.begin()), cdf_.size() - 1);
}

double ZipfSampler::probability(std::size_t index) const {
  return index == 0 ? cdf_[0] : cdf_.at(index) - cdf_[index - 1];
}

std::vector<TraceRecord> generate(const WorkloadProfile& profile, const std::vector<FileId>& snapshot) {
  if (!(profile.arrival_rate > 0.0)) throw Error(ErrorCode::invalid_argument, "arrival_rate must be > 0");
  if (!(profile.duration >= 0.0)) throw Error(ErrorCode::invalid_argument, "duration must be >= 0");
  if (profile.kind != WorkloadKind::mc_import) {
    if (snapshot.empty()) {
      throw Error(ErrorCode::empty_dataset, "workload '" + profile.name + "' has an empty file population");
    }
    if (profile.consumers_per_project < 1) {
      throw Error(ErrorCode::invalid_argument, "consumers_per_project must be >= 1");
    }
    // Plans rely on distinct per-round timestamps after quantization.
    if (!(profile.think_time >= 0.001)) throw Error(ErrorCode::invalid_argument, "think_time must be >= 0.001 s");
  } else if (profile.file_size == 0) {
    throw Error(ErrorCode::invalid_size, "mc_import file_size must be > 0");
  }

  SplitMix64 rng(profile.seed);
  const double rate = profile.arrival_rate / kSecondsPerDay;
  const SimTime end = profile.duration * kSecondsPerDay;
  std::vector<TraceRecord> out;
  SimTime t = profile.start;
  std::size_t index = 0;

  switch (profile.kind) {
    case WorkloadKind::analysis: {
      const ZipfSampler zipf(snapshot.size(), profile.reuse_skew);
      const std::size_t draws =
          profile.files_per_project ? profile.files_per_project : std::min<std::size_t>(snapshot.size(), 10);
      for (;;) {
        t += rng.exponential(rate);
        if (t >= end) break;
        std::set<std::size_t> picked;
        for (std::size_t k = 0; k < draws; ++k) picked.insert(zipf.sample(rng.uniform()));
        std::vector<FileId> files;
        for (std::size_t i : picked) files.push_back(snapshot[i]);
        emit_project(out, profile, quantize(t), label(profile.name, ++index, 5), files);
      }
      break;
    }
    case WorkloadKind::reconstruction: {
      const std::size_t chunk = profile.files_per_project ? profile.files_per_project : snapshot.size();
      std::size_t next = 0;
      while (next < snapshot.size()) {
        t += rng.exponential(rate);
        if (t >= end) break;
        const std::size_t stop = std::min(snapshot.size(), next + chunk);
        std::vector<FileId> files(snapshot.begin() + static_cast<std::ptrdiff_t>(next),
                                  snapshot.begin() + static_cast<std::ptrdiff_t>(stop));
        next = stop;
        emit_project(out, profile, quantize(t), label(profile.name, ++index, 5), files);
      }
      break;
    }
    case WorkloadKind::mc_import: {
      for (;;) {
        t += rng.exponential(rate);
        if (t >= end) break;
        out.push_back({quantize(t), TraceAction::import_file, profile.station_id, "", 0,
                       label(profile.name, ++index, 6),
                       "size=" + std::to_string(profile.file_size) + ";archive=" + profile.archive});
      }
      break;
    }
  }
  sort_trace(out);
  return out;
}

std::vector<TraceRecord> generate(const WorkloadProfile& profile, const Catalog& catalog) {
  if (profile.kind == WorkloadKind::mc_import) return generate(profile, std::vector<FileId>{});
  return generate(profile, catalog.resolve_dataset(profile.file_population));
}

void write_trace(const std::vector<TraceRecord>& trace, std::ostream& out) {
  out << "t,action,station,project,consumer,file,extra\n";
  for (const auto& r : trace) {
    out << detail::fixed(r.t) << ',' << to_string(r.action) << ',' << r.station << ',' << r.project << ','
        << r.consumer << ',' << r.file << ',' << r.extra << '\n';
  }
}

std::vector<TraceRecord> read_trace(std::istream& in) {
  std::vector<TraceRecord> trace;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string trimmed = detail::trim(line);
    if (trimmed.empty()) continue;
    if (line_no == 1 && trimmed.rfind("t,action,", 0) == 0) continue;
    const auto cols = detail::split(trimmed, ',');
    const std::string where = "trace line " + std::to_string(line_no);
    if (cols.size() != 7) throw Error(ErrorCode::parse_error, where + ": expected 7 columns");
    TraceRecord r;
    const auto t = detail::parse_double(cols[0]);
    if (!t || *t < 0.0) throw Error(ErrorCode::parse_error, where + ": bad time '" + cols[0] + "'");
    r.t = quantize(*t);
    const auto action = parse_trace_action(cols[1]);
    if (!action) throw Error(ErrorCode::parse_error, where + ": bad action '" + cols[1] + "'");
    r.action = *action;
    r.station = cols[2];
    r.project = cols[3];
    const auto consumer = detail::parse_number<std::uint32_t>(cols[4]);
    if (!consumer) throw Error(ErrorCode::parse_error, where + ": bad consumer '" + cols[4] + "'");
    r.consumer = *consumer;
    r.file = cols[5];
    r.extra = cols[6];
    trace.push_back(std::move(r));
  }
  return trace;
}

std::map<std::string, std::string, std::less<>> parse_extra(std::string_view extra) {
  std::map<std::string, std::string, std::less<>> kv;
  if (extra.empty()) return kv;
  for (const auto& part : detail::split(extra, ';')) {
    const auto eq = part.find('=');
    if (eq == std::string::npos) throw Error(ErrorCode::parse_error, "extra field '" + part + "' lacks '='");
    kv[part.substr(0, eq)] = part.substr(eq + 1);
  }
  return kv;
}

struct Replayer::Cursor {
  enum class State { idle, waiting, holding, consumed };
  std::string station;
  std::string project;  // station project id once started
  std::uint32_t consumer = 0;
  std::deque<TraceRecord> plan;
  State state = State::idle;
  FileId held;
  bool started = false;
  bool wake_pending = false;
};

Replayer::Replayer(Grid& grid) : grid_(grid) {}
Replayer::~Replayer() = default;

void Replayer::load(std::vector<TraceRecord> trace) {
  std::vector<std::pair<std::size_t, TraceRecord>> indexed;
  indexed.reserve(trace.size());
  for (std::size_t i = 0; i < trace.size(); ++i) indexed.emplace_back(i, std::move(trace[i]));
  std::stable_sort(indexed.begin(), indexed.end(),
                   [](const auto& a, const auto& b) { return trace_order(a.second, b.second); });

  struct Started {
    std::string station;
    std::uint32_t consumers;
  };
  std::map<std::string, Started> labels;
  std::set<std::string> import_names;
  const Catalog& catalog = grid_.catalog();

  for (const auto& [index, rec] : indexed) {
    const std::string where = "trace record " + std::to_string(index);
    auto bad = [&](const std::string& what) { return Error(ErrorCode::unknown_entity, where + ": " + what); };
    if (!grid_.has_station(rec.station)) throw bad("unknown station '" + rec.station + "'");
    const Station& station = grid_.station(rec.station);
    switch (rec.action) {
      case TraceAction::start_project: {
        if (labels.contains(rec.project)) throw bad("project label '" + rec.project + "' started twice");
        if (rec.consumer < 1 || rec.consumer > station.config().consumer_slots) {
          throw bad(std::to_string(rec.consumer) + " consumers exceed the slots of '" + rec.station + "'");
        }
        const auto kv = parse_extra(rec.extra);
        const auto group = kv.find("group");
        if (group == kv.end() || !station.cache().config().group_shares.contains(group->second)) {
          throw bad("unknown group at '" + rec.station + "'");
        }
        const auto think = kv.find("think");
        if (think != kv.end() && !detail::parse_double(think->second)) throw bad("bad think time");
        if (const auto files = kv.find("files"); files != kv.end() && !files->second.empty()) {
          for (const auto& f : detail::split(files->second, ' ')) {
            const auto id = detail::parse_number<std::uint64_t>(f);
            if (!id || !catalog.contains(FileId{*id})) throw bad("unknown file '" + f + "'");
          }
        }
        labels[rec.project] = Started{rec.station, rec.consumer};
        for (std::uint32_t c = 0; c < rec.consumer; ++c) {
          auto cursor = std::make_shared<Cursor>();
          cursor->station = rec.station;
          cursor->consumer = c;
          cursors_[{rec.project, c}] = std::move(cursor);
        }
        grid_.kernel().schedule_at(rec.t, [this, rec] { start(rec); });
        break;
      }
      case TraceAction::next_file:
      case TraceAction::release_file: {
        const auto it = labels.find(rec.project);
        if (it == labels.end()) throw bad("project '" + rec.project + "' not started before use");
        if (it->second.station != rec.station) throw bad("project '" + rec.project + "' runs elsewhere");
        if (rec.consumer >= it->second.consumers) throw bad("no consumer " + std::to_string(rec.consumer));
        cursors_.at({rec.project, rec.consumer})->plan.push_back(rec);
        break;
      }
      case TraceAction::import_file: {
        const auto kv = parse_extra(rec.extra);
        const auto archive = kv.find("archive");
        if (archive == kv.end() || !grid_.has_mss(archive->second)) throw bad("unknown archive");
        if (!grid_.routes().hop_count(rec.station, archive->second)) {
          throw bad("no route from '" + rec.station + "' to '" + archive->second + "'");
        }
        const auto size = kv.find("size");
        if (size == kv.end() || !detail::parse_number<Bytes>(size->second).value_or(0)) throw bad("bad size");
        if (rec.file.empty() || catalog.find(rec.file) || !import_names.insert(rec.file).second) {
          throw bad("import name '" + rec.file + "' already in use");
        }
        grid_.kernel().schedule_at(rec.t, [this, rec] { import(rec); });
        break;
      }
    }
  }
}

void Replayer::start(const TraceRecord& rec) {
  ++stats_.records;
  const auto kv = parse_extra(rec.extra);
  const std::string group = kv.at("group");
  const SimTime think = kv.contains("think") ? *detail::parse_double(kv.at("think")) : 0.0;
  std::vector<FileId> files;
  if (const auto it = kv.find("files"); it != kv.end() && !it->second.empty()) {
    for (const auto& f : detail::split(it->second, ' ')) files.push_back(FileId{*detail::parse_number<std::uint64_t>(f)});
  }
  const std::string id = grid_.station(rec.station).start_project_with_files(std::move(files), group, rec.consumer, think);
  project_ids_[rec.project] = id;
  ++stats_.projects_started;
  for (std::uint32_t c = 0; c < rec.consumer; ++c) {
    auto cursor = cursors_.at({rec.project, c});
    cursor->project = id;
    cursor->started = true;
    advance(cursor);
  }
}

void Replayer::import(const TraceRecord& rec) {
  ++stats_.records;
  const auto kv = parse_extra(rec.extra);
  FileSpec spec;
  spec.logical_name = rec.file;
  spec.size = *detail::parse_number<Bytes>(kv.at("size"));
  spec.crc = crc32(rec.file);
  spec.tier = Tier::montecarlo;
  ++stats_.imports_started;
  grid_.import_file(rec.station, std::move(spec), kv.at("archive"), [this](bool ok) {
    ++(ok ? stats_.imports_archived : stats_.imports_failed);
  });
}

void Replayer::advance(const std::shared_ptr<Cursor>& cursor) {
  using State = Cursor::State;
  if (!cursor->started) return;
  Kernel& kernel = grid_.kernel();
  Station& station = grid_.station(cursor->station);
  while (!cursor->plan.empty()) {
    const TraceRecord& rec = cursor->plan.front();
    if (rec.t > kernel.now()) {
      if (!cursor->wake_pending) {
        cursor->wake_pending = true;
        kernel.schedule_at(rec.t, [this, cursor] {
          cursor->wake_pending = false;
          advance(cursor);
        });
      }
      return;
    }
    if (rec.action == TraceAction::next_file) {
      if (cursor->state != State::idle) return;
      cursor->plan.pop_front();
      ++stats_.records;
      cursor->state = State::waiting;
      station.next_file(
          cursor->project, cursor->consumer,
          [this, cursor](const Delivery& d) {
            if (d.end_of_stream) {
              cursor->plan.clear();
              cursor->state = State::idle;
              return;
            }
            if (d.failed) {
              ++stats_.failed_deliveries;
              cursor->state = State::idle;
              if (!cursor->plan.empty() && cursor->plan.front().action == TraceAction::release_file) {
                cursor->plan.pop_front();
                ++stats_.records;
              }
              advance(cursor);
              return;
            }
            ++stats_.files_delivered;
            cursor->held = d.file;
            cursor->state = State::holding;
          },
          [this, cursor](const Delivery&) {
            cursor->state = State::consumed;
            advance(cursor);
          });
      return;
    }
    if (cursor->state != State::consumed) return;
    cursor->plan.pop_front();
    ++stats_.records;
    station.release_file(cursor->project, cursor->consumer, cursor->held);
    ++stats_.files_released;
    cursor->state = State::idle;
  }
}

}  // namespace samdh
