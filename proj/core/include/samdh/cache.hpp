#pragma once

#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "samdh/types.hpp"

namespace samdh {

enum class CacheMode { distributed, nfs_shared };

std::string_view to_string(CacheMode mode) noexcept;
std::optional<CacheMode> parse_cache_mode(std::string_view text) noexcept;

struct CacheConfig {
  Bytes quota = 0;
  CacheMode mode = CacheMode::distributed;
  /// group -> fraction of quota; fractions > 0 and sum to 1 within 1e-9.
  std::map<std::string, double, std::less<>> group_shares;
  std::uint32_t node_count = 1;

  /// Throws invalid_argument describing the first violated constraint.
  void validate() const;
};

struct CacheEntry {
  FileId file;
  Bytes size = 0;
  std::string group;
  SimTime last_access = 0.0;
  std::uint32_t pin_count = 0;
  std::uint32_t resident_node = 0;

  friend bool operator==(const CacheEntry&, const CacheEntry&) = default;
};

struct AdmitResult {
  bool admitted = false;
  /// Victims in eviction order. Empty when rejected.
  std::vector<FileId> evicted;
};

/// Disk cache of one station: byte quota, per-group fair share, pinning.
///
/// Groups may borrow idle share; eviction only happens when the quota would
/// be exceeded. Victims are picked one at a time: from the group furthest
/// over its share (ties by group name) if any over-share group has an
/// unpinned entry, else from all unpinned entries; within that set the
/// least recently accessed goes first, ties by file id.
///
/// One logical writer per cache. The object is a plain value: copy it to
/// hand state to another thread.
class StationCache {
public:
  explicit StationCache(CacheConfig config);

  /// Throws already_cached, too_large, unknown_group. Returns
  /// {admitted=false} with the cache untouched when pinned entries leave no
  /// room.
  AdmitResult admit(FileId file, Bytes size, std::string_view group, SimTime now);

  /// Throws not_cached, pin_underflow. Returns the new pin count.
  std::uint32_t set_pin(FileId file, int delta);
  /// Throws not_cached.
  void touch(FileId file, SimTime now);
  std::optional<CacheEntry> lookup(FileId file) const;
  bool contains(FileId file) const noexcept { return entries_.contains(file); }

  /// Drops an unpinned entry outside the eviction policy (a reservation
  /// whose transfer failed). Throws not_cached, replica_pinned.
  void erase(FileId file);

  Bytes quota() const noexcept { return config_.quota; }
  Bytes occupancy() const noexcept { return occupancy_; }
  Bytes free_bytes() const noexcept { return config_.quota - occupancy_; }
  Bytes group_occupancy(std::string_view group) const;
  std::size_t entry_count() const noexcept { return entries_.size(); }
  const CacheConfig& config() const noexcept { return config_; }

  /// Entries in file id order.
  std::vector<CacheEntry> entries() const;

  /// CSV `file_id,size,group,last_access,pin_count,node`, file id order.
  void write_dump(std::ostream& out) const;

  /// Placement node: rendezvous hash of the file id over node ids;
  /// always 0 for nfs_shared caches.
  std::uint32_t placement_node(FileId file) const noexcept;

private:
  std::optional<FileId> pick_victim(const std::map<std::string, Bytes, std::less<>>& group_bytes,
                                    const std::vector<FileId>& already_chosen) const;

  CacheConfig config_;
  std::map<FileId, CacheEntry> entries_;
  std::map<std::string, Bytes, std::less<>> group_bytes_;
  Bytes occupancy_ = 0;
};

}  // namespace samdh
