#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <string>
#include <string_view>

namespace samdh {

/// Virtual time in seconds since the start of a run.
using SimTime = double;
using Bytes = std::uint64_t;

inline constexpr SimTime kSecondsPerDay = 86400.0;

/// Opaque catalog file identifier. Ids are dense and assigned in
/// declaration order, so numeric order equals declaration order.
struct FileId {
  std::uint64_t value = 0;

  friend constexpr auto operator<=>(const FileId&, const FileId&) = default;
};

inline std::string to_string(FileId id) { return std::to_string(id.value); }

struct DatasetId {
  std::uint32_t value = 0;

  friend constexpr auto operator<=>(const DatasetId&, const DatasetId&) = default;
};

enum class LocationKind { station, mss };

/// Where a replica lives: a station cache (optionally on a particular node)
/// or a mass storage system. Identity is (kind, id); the node is placement
/// detail within a station.
struct Location {
  LocationKind kind = LocationKind::station;
  std::string id;
  std::uint32_t node = 0;

  static Location station(std::string id, std::uint32_t node = 0) {
    return Location{LocationKind::station, std::move(id), node};
  }
  static Location mss(std::string id) { return Location{LocationKind::mss, std::move(id), 0}; }

  bool is_station() const noexcept { return kind == LocationKind::station; }
  bool is_mss() const noexcept { return kind == LocationKind::mss; }

  /// "station:<id>" or "mss:<id>"; the lexicographic tie-break key.
  std::string str() const { return (is_station() ? "station:" : "mss:") + id; }

  friend bool operator==(const Location& a, const Location& b) noexcept {
    return a.kind == b.kind && a.id == b.id;
  }
};

}  // namespace samdh

template <>
struct std::hash<samdh::FileId> {
  std::size_t operator()(const samdh::FileId& id) const noexcept {
    return std::hash<std::uint64_t>{}(id.value);
  }
};
