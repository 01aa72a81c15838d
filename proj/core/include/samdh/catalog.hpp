#pragma once

#include <istream>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "samdh/types.hpp"

namespace samdh {

class RouteTable;

enum class Tier { raw, reconstructed, secondary, montecarlo };

std::string_view to_string(Tier tier) noexcept;
std::optional<Tier> parse_tier(std::string_view text) noexcept;

/// Metadata supplied when declaring a file.
struct FileSpec {
  std::string logical_name;
  Bytes size = 0;
  std::uint32_t crc = 0;
  Tier tier = Tier::raw;
  std::vector<FileId> parents;
  SimTime declared_at = 0.0;
};

/// Immutable catalog record for one logical file.
struct FileRecord {
  FileId id;
  std::string logical_name;
  Bytes size = 0;
  std::uint32_t crc = 0;
  Tier tier = Tier::raw;
  std::vector<FileId> parents;
  SimTime declared_at = 0.0;
};

enum class ReplicaState { staging, cached, pinned_cached, archived };

std::string_view to_string(ReplicaState state) noexcept;

struct Replica {
  FileId file;
  Location location;
  ReplicaState state = ReplicaState::cached;
};

/// Conjunction of optional clauses; an empty predicate matches everything.
struct DatasetPredicate {
  std::optional<Tier> tier;
  std::optional<std::string> name_glob;     // fnmatch(3) pattern on logical_name
  std::optional<SimTime> declared_from;     // inclusive
  std::optional<SimTime> declared_to;       // exclusive
  std::optional<FileId> has_parent;         // files derived from this one
  std::optional<std::vector<FileId>> members;  // explicit id list

  bool matches(const FileRecord& record) const;
};

struct DatasetDef {
  DatasetId id;
  std::string name;
  DatasetPredicate predicate;
};

/// Authoritative metadata store for files, replicas and datasets.
///
/// A file is physical while it has at least one cached, pinned or archived
/// replica and virtual otherwise (staging replicas do not count). Mutations
/// go through one writer; const members are safe to call concurrently with
/// each other.
class Catalog {
public:
  /// Throws duplicate_name, unknown_parent, invalid_size.
  FileId declare_file(FileSpec spec);

  const FileRecord& file(FileId id) const;
  bool contains(FileId id) const noexcept;
  std::optional<FileId> find(std::string_view logical_name) const;

  /// State defaults to archived for MSS locations and cached for stations.
  /// Throws unknown_file, duplicate_replica.
  Replica add_replica(FileId id, Location location, std::optional<ReplicaState> state = std::nullopt);
  /// Throws unknown_replica, replica_pinned.
  void remove_replica(FileId id, const Location& location);
  void set_replica_state(FileId id, const Location& location, ReplicaState state);
  std::optional<Replica> replica_at(FileId id, const Location& location) const;
  std::vector<Replica> replicas(FileId id) const;

  bool is_physical(FileId id) const;
  std::size_t file_count() const noexcept { return files_.size(); }
  std::size_t physical_count() const noexcept { return physical_count_; }
  std::size_t virtual_count() const noexcept { return files_.size() - physical_count_; }

  /// Throws duplicate_name.
  DatasetId define_dataset(const std::string& name, DatasetPredicate predicate);
  /// Snapshot ordered by (declared_at, logical_name). Throws unknown_dataset.
  std::vector<FileId> resolve_dataset(DatasetId id) const;
  std::vector<FileId> resolve(const DatasetPredicate& predicate) const;
  std::optional<DatasetId> find_dataset(std::string_view name) const;
  const DatasetDef& dataset(DatasetId id) const;

  /// Replicas ordered by access cost from `requesting_station`: the local
  /// cache, then other station caches by route hop count, then MSS copies;
  /// replicas with no route come last. Ties break on Location::str().
  /// Staging replicas are never returned. Throws unknown_file, no_replica.
  std::vector<Replica> locate(FileId id, std::string_view requesting_station,
                              const RouteTable& routes) const;

  /// Reads `logical_name,size,crc_hex,tier,parent_names` lines (parents
  /// ';'-separated, may be empty). A leading header line is skipped.
  /// Returns the ids in file order.
  std::vector<FileId> load_bootstrap_csv(std::istream& in, SimTime declared_at = 0.0);

private:
  struct FileSlot {
    FileRecord record;
    std::vector<Replica> replicas;
    std::size_t materialized = 0;  // replicas that make the file physical
  };

  FileSlot& slot(FileId id);
  const FileSlot& slot(FileId id) const;
  void adjust_materialized(FileSlot& s, ReplicaState state, int delta);

  std::vector<FileSlot> files_;
  std::unordered_map<std::string, FileId> by_name_;
  std::size_t physical_count_ = 0;
  std::vector<DatasetDef> datasets_;
  std::map<std::string, DatasetId, std::less<>> datasets_by_name_;
};

}  // namespace samdh
