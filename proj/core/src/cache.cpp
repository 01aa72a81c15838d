#include "samdh/cache.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>

#include "samdh/error.hpp"
#include "samdh/rng.hpp"
#include "text.hpp"

namespace samdh {

std::string_view to_string(CacheMode mode) noexcept {
  return mode == CacheMode::distributed ? "distributed" : "nfs_shared";
}

std::optional<CacheMode> parse_cache_mode(std::string_view text) noexcept {
  if (text == "distributed") return CacheMode::distributed;
  if (text == "nfs_shared") return CacheMode::nfs_shared;
  return std::nullopt;
}

void CacheConfig::validate() const {
  if (quota == 0) throw Error(ErrorCode::invalid_argument, "cache quota must be > 0");
  if (node_count < 1) throw Error(ErrorCode::invalid_argument, "node_count must be >= 1");
  if (group_shares.empty()) throw Error(ErrorCode::invalid_argument, "at least one group share is required");
  double sum = 0.0;
  for (const auto& [group, share] : group_shares) {
    if (!(share > 0.0)) throw Error(ErrorCode::invalid_argument, "share of group '" + group + "' must be > 0");
    sum += share;
  }
  if (std::abs(sum - 1.0) > 1e-9) {
    throw Error(ErrorCode::invalid_argument, "group shares sum to " + detail::fixed(sum, 12) + ", expected 1");
  }
}

StationCache::StationCache(CacheConfig config) : config_(std::move(config)) {
  config_.validate();
  for (const auto& [group, share] : config_.group_shares) group_bytes_[group] = 0;
}

std::uint32_t StationCache::placement_node(FileId file) const noexcept {
  if (config_.mode == CacheMode::nfs_shared || config_.node_count <= 1) return 0;
  std::uint32_t best = 0;
  std::uint64_t best_score = 0;
  for (std::uint32_t n = 0; n < config_.node_count; ++n) {
    const std::uint64_t score = mix64(file.value * 0x9E3779B97F4A7C15ull ^ mix64(n));
    if (n == 0 || score > best_score) {
      best = n;
      best_score = score;
    }
  }
  return best;
}

Bytes StationCache::group_occupancy(std::string_view group) const {
  auto it = group_bytes_.find(group);
  return it == group_bytes_.end() ? 0 : it->second;
}

std::optional<FileId> StationCache::pick_victim(const std::map<std::string, Bytes, std::less<>>& group_bytes,
                                                const std::vector<FileId>& already_chosen) const {
  auto chosen = [&](FileId f) {
    return std::find(already_chosen.begin(), already_chosen.end(), f) != already_chosen.end();
  };

  // Group furthest over its share that still has something evictable.
  std::optional<std::string> target_group;
  double worst_excess = 0.0;
  for (const auto& [group, bytes] : group_bytes) {
    const double excess =
        static_cast<double>(bytes) - static_cast<double>(config_.quota) * config_.group_shares.find(group)->second;
    if (!(excess > 0.0)) continue;
    if (target_group && !(excess > worst_excess)) continue;
    const bool has_candidate = std::any_of(entries_.begin(), entries_.end(), [&](const auto& kv) {
      return kv.second.group == group && kv.second.pin_count == 0 && !chosen(kv.first);
    });
    if (!has_candidate) continue;
    target_group = group;
    worst_excess = excess;
  }

  const CacheEntry* victim = nullptr;
  for (const auto& [id, entry] : entries_) {
    if (entry.pin_count > 0 || chosen(id)) continue;
    if (target_group && entry.group != *target_group) continue;
    if (!victim || std::tie(entry.last_access, entry.file) < std::tie(victim->last_access, victim->file)) {
      victim = &entry;
    }
  }
  if (!victim) return std::nullopt;
  return victim->file;
}

AdmitResult StationCache::admit(FileId file, Bytes size, std::string_view group, SimTime now) {
  if (entries_.contains(file)) throw Error(ErrorCode::already_cached, "file " + to_string(file) + " already cached");
  if (size > config_.quota) {
    throw Error(ErrorCode::too_large, "file " + to_string(file) + " (" + std::to_string(size) +
                                          " B) exceeds quota " + std::to_string(config_.quota));
  }
  if (!config_.group_shares.contains(group)) {
    throw Error(ErrorCode::unknown_group, "group '" + std::string(group) + "' has no share");
  }

  // Plan every eviction first so a rejection leaves the cache untouched.
  std::vector<FileId> victims;
  auto planned_groups = group_bytes_;
  Bytes planned_free = free_bytes();
  while (planned_free < size) {
    auto victim = pick_victim(planned_groups, victims);
    if (!victim) return AdmitResult{false, {}};
    const CacheEntry& e = entries_.at(*victim);
    planned_groups[e.group] -= e.size;
    planned_free += e.size;
    victims.push_back(*victim);
  }

  for (FileId v : victims) {
    auto it = entries_.find(v);
    group_bytes_[it->second.group] -= it->second.size;
    occupancy_ -= it->second.size;
    entries_.erase(it);
  }
  entries_.emplace(file, CacheEntry{file, size, std::string(group), now, 0, placement_node(file)});
  group_bytes_[std::string(group)] += size;
  occupancy_ += size;
  return AdmitResult{true, std::move(victims)};
}

std::uint32_t StationCache::set_pin(FileId file, int delta) {
  auto it = entries_.find(file);
  if (it == entries_.end()) throw Error(ErrorCode::not_cached, "file " + to_string(file) + " not cached");
  const long long next = static_cast<long long>(it->second.pin_count) + delta;
  if (next < 0) throw Error(ErrorCode::pin_underflow, "file " + to_string(file) + " pin count would go negative");
  it->second.pin_count = static_cast<std::uint32_t>(next);
  return it->second.pin_count;
}

void StationCache::touch(FileId file, SimTime now) {
  auto it = entries_.find(file);
  if (it == entries_.end()) throw Error(ErrorCode::not_cached, "file " + to_string(file) + " not cached");
  it->second.last_access = now;
}

std::optional<CacheEntry> StationCache::lookup(FileId file) const {
  auto it = entries_.find(file);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

void StationCache::erase(FileId file) {
  auto it = entries_.find(file);
  if (it == entries_.end()) throw Error(ErrorCode::not_cached, "file " + to_string(file) + " not cached");
  if (it->second.pin_count > 0) throw Error(ErrorCode::replica_pinned, "file " + to_string(file) + " is pinned");
  group_bytes_[it->second.group] -= it->second.size;
  occupancy_ -= it->second.size;
  entries_.erase(it);
}

std::vector<CacheEntry> StationCache::entries() const {
  std::vector<CacheEntry> out;
  out.reserve(entries_.size());
  for (const auto& [id, e] : entries_) out.push_back(e);
  return out;
}

void StationCache::write_dump(std::ostream& out) const {
  out << "file_id,size,group,last_access,pin_count,node\n";
  for (const auto& [id, e] : entries_) {
    out << e.file.value << ',' << e.size << ',' << e.group << ',' << detail::fixed(e.last_access) << ','
        << e.pin_count << ',' << e.resident_node << '\n';
  }
}

}  // namespace samdh
