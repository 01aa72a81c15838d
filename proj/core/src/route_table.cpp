#include "samdh/route_table.hpp"

#include <unordered_map>

#include "samdh/error.hpp"
#include "text.hpp"

namespace samdh {

void RouteTable::add_node(const std::string& id, const std::string& domain, NodeKind kind) {
  if (id.empty() || id == kDefaultRoute) {
    throw Error(ErrorCode::invalid_argument, "invalid node id '" + id + "'");
  }
  if (nodes_.contains(id)) throw Error(ErrorCode::duplicate_name, "node '" + id + "' already registered");
  if (domain.empty()) throw Error(ErrorCode::invalid_argument, "node '" + id + "' has an empty domain");
  nodes_.emplace(id, Node{domain, kind, false, {}});
  ++domains_[domain];
}

bool RouteTable::has_node(std::string_view id) const { return nodes_.find(id) != nodes_.end(); }

const RouteTable::Node& RouteTable::node(std::string_view id) const {
  auto it = nodes_.find(id);
  if (it == nodes_.end()) throw Error(ErrorCode::unknown_station, "unknown station '" + std::string(id) + "'");
  return it->second;
}

RouteTable::Node& RouteTable::node(std::string_view id) {
  return const_cast<Node&>(std::as_const(*this).node(id));
}

const std::string& RouteTable::domain_of(std::string_view id) const { return node(id).domain; }
NodeKind RouteTable::kind_of(std::string_view id) const { return node(id).kind; }

std::vector<std::string> RouteTable::nodes() const {
  std::vector<std::string> out;
  out.reserve(nodes_.size());
  for (const auto& [id, n] : nodes_) out.push_back(id);
  return out;
}

void RouteTable::add_route(const std::string& station, const std::string& destination,
                           const std::string& next_hop) {
  Node& from = node(station);
  node(next_hop);
  if (destination != kDefaultRoute && !nodes_.contains(destination) && !domains_.contains(destination)) {
    throw Error(ErrorCode::unknown_domain, "route key '" + destination + "' at '" + station +
                                               "' names no node or domain");
  }
  if (next_hop == station) {
    throw Error(ErrorCode::would_create_loop, "'" + station + "' cannot route to itself");
  }

  std::optional<std::string> previous;
  if (auto it = from.routes.find(destination); it != from.routes.end()) previous = it->second;
  from.routes[destination] = next_hop;
  if (!is_loop_free()) {
    if (previous) {
      from.routes[destination] = *previous;
    } else {
      from.routes.erase(destination);
    }
    throw Error(ErrorCode::would_create_loop, "route " + station + " -(" + destination + ")-> " +
                                                  next_hop + " creates a forwarding loop");
  }
}

void RouteTable::remove_route(const std::string& station, const std::string& destination) {
  node(station).routes.erase(destination);
}

std::vector<RouteTable::Entry> RouteTable::routes_of(std::string_view station) const {
  std::vector<Entry> out;
  for (const auto& [dest, hop] : node(station).routes) out.push_back(Entry{dest, hop});
  return out;
}

void RouteTable::set_cache_in_transit(const std::string& station, bool enabled) {
  node(station).cache_in_transit = enabled;
}

bool RouteTable::cache_in_transit(std::string_view station) const { return node(station).cache_in_transit; }

std::optional<std::string> RouteTable::next_hop(std::string_view cur, std::string_view dst) const {
  const Node& here = node(cur);
  const Node& there = node(dst);
  if (cur == dst) return std::nullopt;
  if (auto it = here.routes.find(dst); it != here.routes.end()) return it->second;
  if (here.domain == there.domain) return std::string(dst);
  if (auto it = here.routes.find(there.domain); it != here.routes.end()) return it->second;
  if (auto it = here.routes.find(kDefaultRoute); it != here.routes.end()) return it->second;
  return std::nullopt;
}

std::vector<std::string> RouteTable::compute_path(std::string_view src, std::string_view dst) const {
  node(src);
  node(dst);
  std::vector<std::string> path{std::string(src)};
  while (path.back() != dst) {
    auto hop = next_hop(path.back(), dst);
    if (!hop) {
      throw Error(ErrorCode::no_route, "no route from '" + path.back() + "' toward '" + std::string(dst) + "'");
    }
    if (path.size() > nodes_.size()) {
      // Unreachable while the loop check holds.
      throw Error(ErrorCode::would_create_loop, "forwarding loop toward '" + std::string(dst) + "'");
    }
    path.push_back(std::move(*hop));
  }
  return path;
}

std::optional<std::size_t> RouteTable::hop_count(std::string_view src, std::string_view dst) const {
  try {
    return compute_path(src, dst).size() - 1;
  } catch (const Error& e) {
    if (e.code() == ErrorCode::no_route) return std::nullopt;
    throw;
  }
}

bool RouteTable::is_loop_free() const {
  // For each destination the next-hop relation is a functional graph; it is
  // loop-free iff no walk revisits a node. Memoized colouring keeps this
  // O(N^2) per check.
  enum class Mark : unsigned char { unvisited, on_stack, done };
  for (const auto& [dst, dst_node] : nodes_) {
    std::unordered_map<std::string, Mark> marks;
    for (const auto& [src, src_node] : nodes_) {
      std::vector<std::string> stack;
      std::string cur = src;
      for (;;) {
        Mark& m = marks[cur];
        if (m == Mark::done) break;
        if (m == Mark::on_stack) return false;
        m = Mark::on_stack;
        stack.push_back(cur);
        auto hop = next_hop(cur, dst);
        if (!hop) break;
        cur = std::move(*hop);
      }
      for (const auto& s : stack) marks[s] = Mark::done;
    }
  }
  return true;
}

void RouteTable::load_route_lines(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    line = detail::trim(line);
    if (line.empty() || line.front() == '#') continue;
    auto cols = detail::split(line, ',');
    if (cols.size() != 4) {
      throw Error(ErrorCode::parse_error, "route line " + std::to_string(line_no) + ": expected 4 columns");
    }
    for (auto& c : cols) c = detail::trim(c);
    if (cols[3] != "0" && cols[3] != "1") {
      throw Error(ErrorCode::parse_error,
                  "route line " + std::to_string(line_no) + ": cache_in_transit must be 0 or 1");
    }
    add_route(cols[0], cols[1], cols[2]);
    if (cols[3] == "1") set_cache_in_transit(cols[0], true);
  }
}

}  // namespace samdh
