#pragma once

// Small builders shared by the unit tests.

#include <string>

#include "samdh/crc32.hpp"
#include "samdh/grid.hpp"

namespace fixture {

inline samdh::StationConfig station(const std::string& id, const std::string& domain, samdh::Bytes quota,
                                    std::uint32_t slots = 4, std::uint32_t stages = 4) {
  samdh::StationConfig c;
  c.id = id;
  c.domain = domain;
  c.cache.quota = quota;
  c.cache.group_shares = {{"g", 1.0}};
  c.consumer_slots = slots;
  c.max_concurrent_stages = stages;
  return c;
}

inline samdh::FileId declare(samdh::Grid& grid, const std::string& name, samdh::Bytes size,
                             samdh::Tier tier = samdh::Tier::raw) {
  samdh::FileSpec s;
  s.logical_name = name;
  s.size = size;
  s.crc = samdh::crc32(name);
  s.tier = tier;
  s.declared_at = grid.kernel().now();
  return grid.catalog().declare_file(std::move(s));
}

// Declares a file and caches it at `station`.
inline samdh::FileId cached(samdh::Grid& grid, const std::string& station, const std::string& name,
                            samdh::Bytes size) {
  const auto id = declare(grid, name, size);
  auto& cache = grid.station(station).cache();
  samdh::admit_into_station(cache, grid.catalog(), station, id, size, cache.config().group_shares.begin()->first,
                            grid.kernel().now());
  grid.catalog().add_replica(id, samdh::Location::station(station, cache.placement_node(id)));
  return id;
}

}  // namespace fixture
