#pragma once

#include <istream>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace samdh {

enum class NodeKind { station, mss };

/// Static store-and-forward routing between stations and mass storage
/// systems.
///
/// Every node belongs to a domain (a site or region). A route entry at a
/// node maps a destination key to a next hop. The key is a node id, a domain
/// name, or "*" (default route). The next hop from `cur` toward `dst` is
/// resolved as:
///
///   1. cur == dst: arrived.
///   2. an entry keyed by dst's own id.
///   3. cur and dst share a domain: hop straight to dst.
///   4. an entry keyed by dst's domain.
///   5. the "*" entry.
///   6. otherwise there is no route.
///
/// Updates that would let any (src, dst) walk revisit a node are rejected,
/// so every path is at most node_count() long.
class RouteTable {
public:
  static constexpr std::string_view kDefaultRoute = "*";

  struct Entry {
    std::string destination;
    std::string next_hop;

    friend bool operator==(const Entry&, const Entry&) = default;
  };

  void add_node(const std::string& id, const std::string& domain, NodeKind kind);
  bool has_node(std::string_view id) const;
  const std::string& domain_of(std::string_view id) const;
  NodeKind kind_of(std::string_view id) const;
  /// Node ids in lexicographic order.
  std::vector<std::string> nodes() const;
  std::size_t node_count() const noexcept { return nodes_.size(); }

  /// Throws unknown_station (either endpoint), unknown_domain (key names
  /// neither a node, a domain, nor "*"), or would_create_loop (table left
  /// unchanged). Re-adding a key replaces its next hop.
  void add_route(const std::string& station, const std::string& destination,
                 const std::string& next_hop);
  void remove_route(const std::string& station, const std::string& destination);
  /// Entries of one node, sorted by destination key.
  std::vector<Entry> routes_of(std::string_view station) const;

  void set_cache_in_transit(const std::string& station, bool enabled);
  bool cache_in_transit(std::string_view station) const;

  /// nullopt when cur == dst or no rule applies.
  std::optional<std::string> next_hop(std::string_view cur, std::string_view dst) const;

  /// [src, ..., dst]. Throws unknown_station or no_route.
  std::vector<std::string> compute_path(std::string_view src, std::string_view dst) const;
  /// Number of hops, nullopt if unreachable.
  std::optional<std::size_t> hop_count(std::string_view src, std::string_view dst) const;

  /// Reads `station,domain,next_hop,cache_in_transit(0|1)` lines. Blank lines
  /// and lines starting with '#' are skipped. A 1 in the last column turns
  /// transit caching on for that station.
  void load_route_lines(std::istream& in);

private:
  struct Node {
    std::string domain;
    NodeKind kind = NodeKind::station;
    bool cache_in_transit = false;
    std::map<std::string, std::string, std::less<>> routes;
  };

  const Node& node(std::string_view id) const;
  Node& node(std::string_view id);
  bool is_loop_free() const;

  std::map<std::string, Node, std::less<>> nodes_;
  std::map<std::string, int, std::less<>> domains_;  // domain -> member count
};

}  // namespace samdh
