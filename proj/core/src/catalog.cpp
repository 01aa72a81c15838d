#include "samdh/catalog.hpp"

#include <fnmatch.h>

#include <algorithm>
#include <tuple>

#include "samdh/error.hpp"
#include "samdh/route_table.hpp"
#include "text.hpp"

namespace samdh {

std::string_view to_string(Tier tier) noexcept {
  switch (tier) {
    case Tier::raw: return "raw";
    case Tier::reconstructed: return "reconstructed";
    case Tier::secondary: return "secondary";
    case Tier::montecarlo: return "montecarlo";
  }
  return "?";
}

std::optional<Tier> parse_tier(std::string_view text) noexcept {
  for (Tier t : {Tier::raw, Tier::reconstructed, Tier::secondary, Tier::montecarlo}) {
    if (to_string(t) == text) return t;
  }
  return std::nullopt;
}

std::string_view to_string(ReplicaState state) noexcept {
  switch (state) {
    case ReplicaState::staging: return "staging";
    case ReplicaState::cached: return "cached";
    case ReplicaState::pinned_cached: return "pinned_cached";
    case ReplicaState::archived: return "archived";
  }
  return "?";
}

bool DatasetPredicate::matches(const FileRecord& r) const {
  if (tier && r.tier != *tier) return false;
  if (name_glob && ::fnmatch(name_glob->c_str(), r.logical_name.c_str(), 0) != 0) return false;
  if (declared_from && r.declared_at < *declared_from) return false;
  if (declared_to && !(r.declared_at < *declared_to)) return false;
  if (has_parent && std::find(r.parents.begin(), r.parents.end(), *has_parent) == r.parents.end()) {
    return false;
  }
  if (members && std::find(members->begin(), members->end(), r.id) == members->end()) return false;
  return true;
}

Catalog::FileSlot& Catalog::slot(FileId id) {
  return const_cast<FileSlot&>(std::as_const(*this).slot(id));
}

const Catalog::FileSlot& Catalog::slot(FileId id) const {
  if (!contains(id)) throw Error(ErrorCode::unknown_file, "unknown file id " + to_string(id));
  return files_[id.value - 1];
}

bool Catalog::contains(FileId id) const noexcept { return id.value >= 1 && id.value <= files_.size(); }

FileId Catalog::declare_file(FileSpec spec) {
  if (spec.logical_name.empty()) throw Error(ErrorCode::invalid_argument, "empty logical name");
  if (by_name_.contains(spec.logical_name)) {
    throw Error(ErrorCode::duplicate_name, "file '" + spec.logical_name + "' already declared");
  }
  if (spec.size == 0) throw Error(ErrorCode::invalid_size, "file '" + spec.logical_name + "' has size 0");
  for (FileId p : spec.parents) {
    if (!contains(p)) throw Error(ErrorCode::unknown_parent, "parent id " + to_string(p) + " not declared");
  }
  const FileId id{files_.size() + 1};
  FileRecord record{id,        std::move(spec.logical_name), spec.size, spec.crc, spec.tier,
                    std::move(spec.parents), spec.declared_at};
  by_name_.emplace(record.logical_name, id);
  files_.push_back(FileSlot{std::move(record), {}, 0});
  return id;
}

const FileRecord& Catalog::file(FileId id) const { return slot(id).record; }

std::optional<FileId> Catalog::find(std::string_view logical_name) const {
  auto it = by_name_.find(std::string(logical_name));
  if (it == by_name_.end()) return std::nullopt;
  return it->second;
}

void Catalog::adjust_materialized(FileSlot& s, ReplicaState state, int delta) {
  if (state == ReplicaState::staging) return;
  const bool was = s.materialized > 0;
  s.materialized = static_cast<std::size_t>(static_cast<long long>(s.materialized) + delta);
  const bool is = s.materialized > 0;
  if (!was && is) ++physical_count_;
  if (was && !is) --physical_count_;
}

Replica Catalog::add_replica(FileId id, Location location, std::optional<ReplicaState> state) {
  FileSlot& s = slot(id);
  for (const auto& r : s.replicas) {
    if (r.location == location) {
      throw Error(ErrorCode::duplicate_replica,
                  "file " + to_string(id) + " already has a replica at " + location.str());
    }
  }
  const ReplicaState st = state.value_or(location.is_mss() ? ReplicaState::archived : ReplicaState::cached);
  Replica replica{id, std::move(location), st};
  s.replicas.push_back(replica);
  adjust_materialized(s, st, +1);
  return replica;
}

void Catalog::remove_replica(FileId id, const Location& location) {
  FileSlot& s = slot(id);
  auto it = std::find_if(s.replicas.begin(), s.replicas.end(),
                         [&](const Replica& r) { return r.location == location; });
  if (it == s.replicas.end()) {
    throw Error(ErrorCode::unknown_replica, "file " + to_string(id) + " has no replica at " + location.str());
  }
  if (it->state == ReplicaState::pinned_cached) {
    throw Error(ErrorCode::replica_pinned, "replica of " + to_string(id) + " at " + location.str() + " is pinned");
  }
  adjust_materialized(s, it->state, -1);
  s.replicas.erase(it);
}

void Catalog::set_replica_state(FileId id, const Location& location, ReplicaState state) {
  FileSlot& s = slot(id);
  for (auto& r : s.replicas) {
    if (r.location == location) {
      adjust_materialized(s, r.state, -1);
      r.state = state;
      adjust_materialized(s, r.state, +1);
      return;
    }
  }
  throw Error(ErrorCode::unknown_replica, "file " + to_string(id) + " has no replica at " + location.str());
}

std::optional<Replica> Catalog::replica_at(FileId id, const Location& location) const {
  for (const auto& r : slot(id).replicas) {
    if (r.location == location) return r;
  }
  return std::nullopt;
}

std::vector<Replica> Catalog::replicas(FileId id) const { return slot(id).replicas; }

bool Catalog::is_physical(FileId id) const { return slot(id).materialized > 0; }

DatasetId Catalog::define_dataset(const std::string& name, DatasetPredicate predicate) {
  if (datasets_by_name_.contains(name)) {
    throw Error(ErrorCode::duplicate_name, "dataset '" + name + "' already defined");
  }
  const DatasetId id{static_cast<std::uint32_t>(datasets_.size() + 1)};
  datasets_.push_back(DatasetDef{id, name, std::move(predicate)});
  datasets_by_name_.emplace(name, id);
  return id;
}

const DatasetDef& Catalog::dataset(DatasetId id) const {
  if (id.value < 1 || id.value > datasets_.size()) {
    throw Error(ErrorCode::unknown_dataset, "unknown dataset id " + std::to_string(id.value));
  }
  return datasets_[id.value - 1];
}

std::optional<DatasetId> Catalog::find_dataset(std::string_view name) const {
  auto it = datasets_by_name_.find(name);
  if (it == datasets_by_name_.end()) return std::nullopt;
  return it->second;
}

std::vector<FileId> Catalog::resolve_dataset(DatasetId id) const { return resolve(dataset(id).predicate); }

std::vector<FileId> Catalog::resolve(const DatasetPredicate& predicate) const {
  std::vector<const FileRecord*> hits;
  for (const auto& s : files_) {
    if (predicate.matches(s.record)) hits.push_back(&s.record);
  }
  std::sort(hits.begin(), hits.end(), [](const FileRecord* a, const FileRecord* b) {
    return std::tie(a->declared_at, a->logical_name) < std::tie(b->declared_at, b->logical_name);
  });
  std::vector<FileId> out;
  out.reserve(hits.size());
  for (const auto* r : hits) out.push_back(r->id);
  return out;
}

std::vector<Replica> Catalog::locate(FileId id, std::string_view requesting_station,
                                     const RouteTable& routes) const {
  const FileSlot& s = slot(id);
  constexpr std::size_t kUnreachable = static_cast<std::size_t>(-1);
  struct Ranked {
    int tier;  // 0 local, 1 remote station, 2 mss, 3 unreachable
    std::size_t hops;
    std::string key;
    const Replica* replica;
  };
  std::vector<Ranked> ranked;
  for (const auto& r : s.replicas) {
    if (r.state == ReplicaState::staging) continue;
    Ranked entry{0, 0, r.location.str(), &r};
    if (r.location.is_station() && r.location.id == requesting_station) {
      entry.tier = 0;
    } else {
      const auto hops = routes.hop_count(r.location.id, requesting_station);
      entry.hops = hops.value_or(kUnreachable);
      if (!hops) {
        entry.tier = 3;
      } else {
        entry.tier = r.location.is_mss() ? 2 : 1;
      }
    }
    ranked.push_back(std::move(entry));
  }
  if (ranked.empty()) throw Error(ErrorCode::no_replica, "file " + to_string(id) + " is virtual");
  std::sort(ranked.begin(), ranked.end(), [](const Ranked& a, const Ranked& b) {
    return std::tie(a.tier, a.hops, a.key) < std::tie(b.tier, b.hops, b.key);
  });
  std::vector<Replica> out;
  out.reserve(ranked.size());
  for (const auto& r : ranked) out.push_back(*r.replica);
  return out;
}

std::vector<FileId> Catalog::load_bootstrap_csv(std::istream& in, SimTime declared_at) {
  std::vector<FileId> ids;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string trimmed = detail::trim(line);
    if (trimmed.empty() || trimmed.front() == '#') continue;
    if (line_no == 1 && trimmed.rfind("logical_name,", 0) == 0) continue;
    auto cols = detail::split(trimmed, ',');
    const std::string where = "catalog line " + std::to_string(line_no);
    if (cols.size() != 5) throw Error(ErrorCode::parse_error, where + ": expected 5 columns");
    for (auto& c : cols) c = detail::trim(c);
    FileSpec spec;
    spec.logical_name = cols[0];
    auto size = detail::parse_number<Bytes>(cols[1]);
    if (!size) throw Error(ErrorCode::parse_error, where + ": bad size '" + cols[1] + "'");
    spec.size = *size;
    std::uint32_t crc = 0;
    auto [ptr, ec] = std::from_chars(cols[2].data(), cols[2].data() + cols[2].size(), crc, 16);
    if (ec != std::errc{} || ptr != cols[2].data() + cols[2].size() || cols[2].empty()) {
      throw Error(ErrorCode::parse_error, where + ": bad crc '" + cols[2] + "'");
    }
    spec.crc = crc;
    auto tier = parse_tier(cols[3]);
    if (!tier) throw Error(ErrorCode::parse_error, where + ": bad tier '" + cols[3] + "'");
    spec.tier = *tier;
    if (!cols[4].empty()) {
      for (const auto& parent : detail::split(cols[4], ';')) {
        auto pid = find(detail::trim(parent));
        if (!pid) throw Error(ErrorCode::unknown_parent, where + ": parent '" + parent + "' not declared");
        spec.parents.push_back(*pid);
      }
    }
    spec.declared_at = declared_at;
    ids.push_back(declare_file(std::move(spec)));
  }
  return ids;
}

}  // namespace samdh
