#include "samdh/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "samdh/crc32.hpp"
#include "samdh/error.hpp"
#include "samdh/forwarder.hpp"
#include "samdh/rng.hpp"
#include "text.hpp"

namespace samdh {

using nlohmann::json;

namespace {

std::string member(const std::string& base, const std::string& key) { return base.empty() ? key : base + "." + key; }
std::string element(const std::string& base, std::size_t i) { return base + "[" + std::to_string(i) + "]"; }

double as_number(const json& v, const std::string& path) {
  if (!v.is_number()) throw ConfigError(path, "expected a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) throw ConfigError(path, "expected a finite number");
  return d;
}

std::uint64_t as_uint(const json& v, const std::string& path) {
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_number_integer() && v.get<std::int64_t>() >= 0) return static_cast<std::uint64_t>(v.get<std::int64_t>());
  if (v.is_number_float()) {
    const double d = v.get<double>();
    if (d >= 0.0 && d == std::floor(d) && d < 1.8e19) return static_cast<std::uint64_t>(d);
  }
  throw ConfigError(path, "expected a non-negative integer");
}

std::string as_string(const json& v, const std::string& path) {
  if (!v.is_string()) throw ConfigError(path, "expected a string");
  return v.get<std::string>();
}

// Object reader that tracks which keys were consumed so leftovers can be
// reported as unknown.
class Fields {
public:
  Fields(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j.is_object()) throw ConfigError(path_.empty() ? "<root>" : path_, "expected an object");
  }

  std::string at(const std::string& key) const { return member(path_, key); }

  const json* find(const std::string& key) {
    used_.insert(key);
    const auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  const json& require(const std::string& key) {
    const json* v = find(key);
    if (!v) throw ConfigError(at(key), "required field is missing");
    return *v;
  }

  std::string string(const std::string& key) { return as_string(require(key), at(key)); }
  std::optional<std::string> opt_string(const std::string& key) {
    const json* v = find(key);
    return v ? std::optional<std::string>(as_string(*v, at(key))) : std::nullopt;
  }
  double number(const std::string& key) { return as_number(require(key), at(key)); }
  double number(const std::string& key, double fallback) {
    const json* v = find(key);
    return v ? as_number(*v, at(key)) : fallback;
  }
  std::optional<double> opt_number(const std::string& key) {
    const json* v = find(key);
    return v ? std::optional<double>(as_number(*v, at(key))) : std::nullopt;
  }
  std::uint64_t uint(const std::string& key) { return as_uint(require(key), at(key)); }
  std::uint64_t uint(const std::string& key, std::uint64_t fallback) {
    const json* v = find(key);
    return v ? as_uint(*v, at(key)) : fallback;
  }
  bool boolean(const std::string& key, bool fallback) {
    const json* v = find(key);
    if (!v) return fallback;
    if (!v->is_boolean()) throw ConfigError(at(key), "expected true or false");
    return v->get<bool>();
  }
  const json* array(const std::string& key) {
    const json* v = find(key);
    if (v && !v->is_array()) throw ConfigError(at(key), "expected an array");
    return v;
  }

  void done() const {
    for (const auto& item : j_.items()) {
      if (!used_.contains(item.key())) throw ConfigError(at(item.key()), "unknown key");
    }
  }

private:
  const json& j_;
  std::string path_;
  std::set<std::string> used_;
};

std::uint32_t as_u32(std::uint64_t v, const std::string& path) {
  if (v > 0xFFFFFFFFull) throw ConfigError(path, "value out of range");
  return static_cast<std::uint32_t>(v);
}

Tier tier_field(Fields& f, const std::string& key, Tier fallback) {
  const auto text = f.opt_string(key);
  if (!text) return fallback;
  const auto tier = parse_tier(*text);
  if (!tier) throw ConfigError(f.at(key), "unknown tier '" + *text + "'");
  return *tier;
}

LinkSpec link_spec(Fields& f) {
  LinkSpec spec;
  spec.bandwidth = f.number("bandwidth");
  if (!(spec.bandwidth > 0.0)) throw ConfigError(f.at("bandwidth"), "must be > 0");
  spec.latency = f.number("latency", 0.0);
  if (spec.latency < 0.0) throw ConfigError(f.at("latency"), "must be >= 0");
  return spec;
}

std::vector<LinkConfig> link_list(const json* arr, const std::string& path) {
  std::vector<LinkConfig> out;
  if (!arr) return out;
  for (std::size_t i = 0; i < arr->size(); ++i) {
    Fields f((*arr)[i], element(path, i));
    LinkConfig link;
    link.a = f.string("a");
    link.b = f.string("b");
    link.spec = link_spec(f);
    f.done();
    out.push_back(std::move(link));
  }
  return out;
}

StationConfig parse_station(const json& j, const std::string& path) {
  Fields f(j, path);
  StationConfig s;
  s.id = f.string("id");
  s.domain = f.string("domain");
  s.cache.quota = f.uint("cache_bytes");
  const std::string mode = f.opt_string("cache_mode").value_or("distributed");
  const auto parsed_mode = parse_cache_mode(mode);
  if (!parsed_mode) throw ConfigError(f.at("cache_mode"), "expected distributed or nfs_shared");
  s.cache.mode = *parsed_mode;
  s.cache.node_count = as_u32(f.uint("nodes", 1), f.at("nodes"));
  if (const json* groups = f.find("groups")) {
    if (!groups->is_object() || groups->empty()) throw ConfigError(f.at("groups"), "expected a non-empty object");
    for (const auto& item : groups->items()) {
      s.cache.group_shares[item.key()] = as_number(item.value(), member(f.at("groups"), item.key()));
    }
  } else {
    s.cache.group_shares["default"] = 1.0;
  }
  s.consumer_slots = as_u32(f.uint("consumer_slots", 1), f.at("consumer_slots"));
  const std::string delivery = f.opt_string("delivery").value_or("copy_to_cache");
  const auto parsed_delivery = parse_delivery_mode(delivery);
  if (!parsed_delivery) throw ConfigError(f.at("delivery"), "expected copy_to_cache or network_attached");
  s.delivery_mode = *parsed_delivery;
  s.max_concurrent_stages = as_u32(f.uint("max_concurrent_stages", 1), f.at("max_concurrent_stages"));
  s.nfs_server_bandwidth = f.number("nfs_server_bandwidth", s.nfs_server_bandwidth);
  f.done();
  try {
    s.validate();
  } catch (const Error& e) {
    throw ConfigError(path, e.what());
  }
  return s;
}

MssConfig parse_mss(const json& j, const std::string& path) {
  Fields f(j, path);
  MssConfig m;
  m.library.id = f.string("id");
  m.domain = f.string("domain");
  m.library.drives = as_u32(f.uint("drives", m.library.drives), f.at("drives"));
  m.library.mount_latency = f.number("mount_latency", m.library.mount_latency);
  m.library.drive_rate = f.number("drive_rate", m.library.drive_rate);
  m.library.tape_capacity = f.uint("tape_capacity", m.library.tape_capacity);
  f.done();
  try {
    m.library.validate();
  } catch (const Error& e) {
    throw ConfigError(path, e.what());
  }
  return m;
}

FileSetConfig parse_file_set(const json& j, const std::string& path) {
  Fields f(j, path);
  FileSetConfig s;
  s.prefix = f.string("prefix");
  s.count = f.uint("count");
  s.size_bytes = f.uint("size_bytes");
  if (s.count == 0) throw ConfigError(f.at("count"), "must be >= 1");
  if (s.size_bytes == 0) throw ConfigError(f.at("size_bytes"), "must be > 0");
  s.tier = tier_field(f, "tier", Tier::raw);
  s.declared_at = f.number("declared_at", 0.0);
  s.archive_to = f.opt_string("archive_to");
  if (const json* arr = f.array("cached_at")) {
    for (std::size_t i = 0; i < arr->size(); ++i) s.cached_at.push_back(as_string((*arr)[i], element(f.at("cached_at"), i)));
  }
  f.done();
  return s;
}

DatasetConfig parse_dataset(const json& j, const std::string& path) {
  Fields f(j, path);
  DatasetConfig d;
  d.name = f.string("name");
  if (const auto text = f.opt_string("tier")) {
    d.tier = parse_tier(*text);
    if (!d.tier) throw ConfigError(f.at("tier"), "unknown tier '" + *text + "'");
  }
  d.name_glob = f.opt_string("name_glob");
  d.declared_from = f.opt_number("declared_from");
  d.declared_to = f.opt_number("declared_to");
  d.has_parent = f.opt_string("has_parent");
  if (const json* arr = f.array("members")) {
    std::vector<std::string> names;
    for (std::size_t i = 0; i < arr->size(); ++i) names.push_back(as_string((*arr)[i], element(f.at("members"), i)));
    d.members = std::move(names);
  }
  f.done();
  return d;
}

WorkloadConfig parse_workload(const json& j, const std::string& path) {
  Fields f(j, path);
  WorkloadConfig w;
  w.name = f.string("name");
  const std::string kind = f.string("kind");
  const auto parsed = parse_workload_kind(kind);
  if (!parsed) throw ConfigError(f.at("kind"), "expected analysis, reconstruction or mc_import");
  w.kind = *parsed;
  w.station = f.string("station");
  w.group = f.opt_string("group").value_or("");
  w.dataset = f.opt_string("dataset").value_or("");
  w.reuse_skew = f.number("reuse_skew", 0.0);
  w.arrival_rate = f.number("arrival_rate");
  w.consumers = as_u32(f.uint("consumers", 1), f.at("consumers"));
  w.think_time = f.number("think_time", 1.0);
  w.files_per_project = f.uint("files_per_project", 0);
  w.start_day = f.number("start_day", 0.0);
  w.duration_days = f.opt_number("duration_days");
  w.archive = f.opt_string("archive").value_or("");
  w.file_size = f.uint("file_size", 0);
  f.done();
  return w;
}

std::string file_name(const std::string& prefix, std::size_t index) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "-%06zu", index);
  return prefix + buf;
}

DatasetPredicate predicate_of(const DatasetConfig& d, const Catalog& catalog) {
  DatasetPredicate p;
  p.tier = d.tier;
  p.name_glob = d.name_glob;
  p.declared_from = d.declared_from;
  p.declared_to = d.declared_to;
  if (d.has_parent) p.has_parent = catalog.find(*d.has_parent);
  if (d.members) {
    std::vector<FileId> ids;
    for (const auto& name : *d.members) {
      if (const auto id = catalog.find(name)) ids.push_back(*id);
    }
    p.members = std::move(ids);
  }
  return p;
}

// Declares every configured file set in order, reporting each new id.
void declare_files(const ScenarioConfig& config, Catalog& catalog, const std::function<void(FileId, std::size_t)>& placed) {
  for (std::size_t s = 0; s < config.files.size(); ++s) {
    const auto& set = config.files[s];
    for (std::size_t k = 1; k <= set.count; ++k) {
      FileSpec spec;
      spec.logical_name = file_name(set.prefix, k);
      spec.size = set.size_bytes;
      spec.crc = crc32(spec.logical_name);
      spec.tier = set.tier;
      spec.declared_at = set.declared_at;
      placed(catalog.declare_file(std::move(spec)), s);
    }
  }
}

}  // namespace

void validate(const ScenarioConfig& config) {
  if (config.name.empty()) throw ConfigError("name", "must not be empty");
  if (!(config.duration_days > 0.0)) throw ConfigError("duration_days", "must be > 0");
  if (config.corruption_probability < 0.0 || config.corruption_probability >= 1.0) {
    throw ConfigError("corruption_probability", "must be in [0, 1)");
  }
  if (config.stations.empty()) throw ConfigError("stations", "at least one station is required");

  std::set<std::string> domains;
  std::map<std::string, const StationConfig*> stations;
  std::set<std::string> mss;
  RouteTable routes;
  auto check_id = [](const std::string& id, const std::string& path) {
    if (id.empty()) throw ConfigError(path, "must not be empty");
    if (id.find_first_of(",#;= ") != std::string::npos) throw ConfigError(path, "must not contain , # ; = or spaces");
  };
  for (std::size_t i = 0; i < config.stations.size(); ++i) {
    const auto& s = config.stations[i];
    const std::string path = element("stations", i);
    check_id(s.id, path + ".id");
    if (routes.has_node(s.id)) throw ConfigError(path + ".id", "duplicate node id '" + s.id + "'");
    routes.add_node(s.id, s.domain, NodeKind::station);
    domains.insert(s.domain);
    stations[s.id] = &s;
  }
  for (std::size_t i = 0; i < config.mss.size(); ++i) {
    const auto& m = config.mss[i];
    const std::string path = element("mss", i);
    check_id(m.library.id, path + ".id");
    if (routes.has_node(m.library.id)) throw ConfigError(path + ".id", "duplicate node id '" + m.library.id + "'");
    if (m.domain.empty()) throw ConfigError(path + ".domain", "must not be empty");
    routes.add_node(m.library.id, m.domain, NodeKind::mss);
    domains.insert(m.domain);
    mss.insert(m.library.id);
  }
  for (std::size_t i = 0; i < config.domain_links.size(); ++i) {
    const auto& l = config.domain_links[i];
    const std::string path = element("links.domains", i);
    if (!domains.contains(l.a)) throw ConfigError(path + ".a", "unknown domain '" + l.a + "'");
    if (!domains.contains(l.b)) throw ConfigError(path + ".b", "unknown domain '" + l.b + "'");
  }
  for (std::size_t i = 0; i < config.links.size(); ++i) {
    const auto& l = config.links[i];
    const std::string path = element("links.explicit", i);
    if (!routes.has_node(l.a)) throw ConfigError(path + ".a", "unknown node '" + l.a + "'");
    if (!routes.has_node(l.b)) throw ConfigError(path + ".b", "unknown node '" + l.b + "'");
    if (l.a == l.b) throw ConfigError(path, "link endpoints must differ");
  }
  for (std::size_t i = 0; i < config.routes.size(); ++i) {
    const auto& r = config.routes[i];
    const std::string path = element("routes", i);
    if (!routes.has_node(r.station)) throw ConfigError(path + ".station", "unknown node '" + r.station + "'");
    if (r.destination != "*" && !routes.has_node(r.destination) && !domains.contains(r.destination)) {
      throw ConfigError(path + ".destination", "'" + r.destination + "' is neither a node, a domain, nor '*'");
    }
    if (!routes.has_node(r.next_hop)) throw ConfigError(path + ".next_hop", "unknown next_hop '" + r.next_hop + "'");
    if (r.next_hop == r.station) throw ConfigError(path + ".next_hop", "next_hop equals the station");
    try {
      routes.add_route(r.station, r.destination, r.next_hop);
    } catch (const Error& e) {
      throw ConfigError(path, e.code() == ErrorCode::would_create_loop ? "entry would create a routing loop"
                                                                       : std::string(e.what()));
    }
  }

  Catalog catalog;
  std::map<std::string, Bytes> cached_bytes;
  for (std::size_t s = 0; s < config.files.size(); ++s) {
    const auto& set = config.files[s];
    const std::string path = element("files", s);
    check_id(set.prefix, path + ".prefix");
    if (set.archive_to && !mss.contains(*set.archive_to)) {
      throw ConfigError(path + ".archive_to", "unknown mss '" + *set.archive_to + "'");
    }
    for (std::size_t k = 0; k < set.cached_at.size(); ++k) {
      const auto it = stations.find(set.cached_at[k]);
      const std::string cpath = element(path + ".cached_at", k);
      if (it == stations.end()) throw ConfigError(cpath, "unknown station '" + set.cached_at[k] + "'");
      cached_bytes[it->first] += set.size_bytes * set.count;
      if (cached_bytes[it->first] > it->second->cache.quota) {
        throw ConfigError(cpath, "initial files exceed the cache quota of '" + it->first + "'");
      }
    }
  }
  try {
    declare_files(config, catalog, [](FileId, std::size_t) {});
  } catch (const Error& e) {
    throw ConfigError("files", e.what());
  }
  if (config.catalog_csv) {
    std::ifstream in(*config.catalog_csv);
    if (!in) throw ConfigError("catalog_csv", "cannot open '" + config.catalog_csv->string() + "'");
    try {
      catalog.load_bootstrap_csv(in);
    } catch (const Error& e) {
      throw ConfigError("catalog_csv", e.what());
    }
  }
  if (config.catalog_archive && !mss.contains(*config.catalog_archive)) {
    throw ConfigError("catalog_archive", "unknown mss '" + *config.catalog_archive + "'");
  }

  for (std::size_t i = 0; i < config.datasets.size(); ++i) {
    const auto& d = config.datasets[i];
    const std::string path = element("datasets", i);
    if (catalog.find_dataset(d.name)) throw ConfigError(path + ".name", "duplicate dataset '" + d.name + "'");
    if (d.has_parent && !catalog.find(*d.has_parent)) {
      throw ConfigError(path + ".has_parent", "unknown file '" + *d.has_parent + "'");
    }
    if (d.members) {
      for (std::size_t k = 0; k < d.members->size(); ++k) {
        if (!catalog.find((*d.members)[k])) {
          throw ConfigError(element(path + ".members", k), "unknown file '" + (*d.members)[k] + "'");
        }
      }
    }
    catalog.define_dataset(d.name, predicate_of(d, catalog));
  }

  std::set<std::string> workload_names;
  std::set<std::string> prefixes;
  for (const auto& set : config.files) prefixes.insert(set.prefix);
  for (std::size_t i = 0; i < config.workloads.size(); ++i) {
    const auto& w = config.workloads[i];
    const std::string path = element("workloads", i);
    check_id(w.name, path + ".name");
    if (!workload_names.insert(w.name).second) throw ConfigError(path + ".name", "duplicate workload '" + w.name + "'");
    const auto st = stations.find(w.station);
    if (st == stations.end()) throw ConfigError(path + ".station", "unknown station '" + w.station + "'");
    if (!(w.arrival_rate > 0.0)) throw ConfigError(path + ".arrival_rate", "must be > 0");
    if (w.start_day < 0.0) throw ConfigError(path + ".start_day", "must be >= 0");
    if (w.duration_days && !(*w.duration_days > 0.0)) throw ConfigError(path + ".duration_days", "must be > 0");
    if (w.kind == WorkloadKind::mc_import) {
      if (!mss.contains(w.archive)) throw ConfigError(path + ".archive", "unknown mss '" + w.archive + "'");
      if (!routes.hop_count(w.station, w.archive)) {
        throw ConfigError(path + ".archive", "no route from '" + w.station + "' to '" + w.archive + "'");
      }
      if (w.file_size == 0) throw ConfigError(path + ".file_size", "must be > 0");
      if (prefixes.contains(w.name)) throw ConfigError(path + ".name", "collides with a file set prefix");
      continue;
    }
    if (!st->second->cache.group_shares.contains(w.group)) {
      throw ConfigError(path + ".group", "group '" + w.group + "' has no share at '" + w.station + "'");
    }
    const auto ds = catalog.find_dataset(w.dataset);
    if (!ds) throw ConfigError(path + ".dataset", "unknown dataset '" + w.dataset + "'");
    if (catalog.resolve_dataset(*ds).empty()) throw ConfigError(path + ".dataset", "dataset resolves to no files");
    if (w.consumers < 1 || w.consumers > st->second->consumer_slots) {
      throw ConfigError(path + ".consumers", "must be between 1 and the station's consumer_slots");
    }
    if (!(w.think_time >= 0.001)) throw ConfigError(path + ".think_time", "must be >= 0.001");
    if (w.reuse_skew < 0.0) throw ConfigError(path + ".reuse_skew", "must be >= 0");
  }
}

ScenarioConfig parse_scenario(const std::string& json_text, const std::filesystem::path& base_dir) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError("<document>", e.what());
  }
  Fields root(doc, "");
  ScenarioConfig c;
  const std::uint64_t schema = root.uint("schema");
  if (schema != 1) throw ConfigError("schema", "unsupported schema version " + std::to_string(schema));
  c.name = root.string("name");
  c.seed = root.uint("seed", c.seed);
  c.duration_days = root.number("duration_days", c.duration_days);
  c.retry_budget = as_u32(root.uint("retry_budget", c.retry_budget), "retry_budget");
  c.corruption_probability = root.number("corruption_probability", 0.0);

  if (const json* links = root.find("links")) {
    Fields lf(*links, "links");
    if (const json* d = lf.find("default")) {
      Fields df(*d, "links.default");
      c.default_link = link_spec(df);
      df.done();
    }
    c.domain_links = link_list(lf.array("domains"), "links.domains");
    c.links = link_list(lf.array("explicit"), "links.explicit");
    lf.done();
  }
  if (const json* arr = root.array("stations")) {
    for (std::size_t i = 0; i < arr->size(); ++i) c.stations.push_back(parse_station((*arr)[i], element("stations", i)));
  }
  if (const json* arr = root.array("mss")) {
    for (std::size_t i = 0; i < arr->size(); ++i) c.mss.push_back(parse_mss((*arr)[i], element("mss", i)));
  }
  if (const json* arr = root.array("routes")) {
    for (std::size_t i = 0; i < arr->size(); ++i) {
      Fields f((*arr)[i], element("routes", i));
      RouteConfig r;
      r.station = f.string("station");
      r.destination = f.string("destination");
      r.next_hop = f.string("next_hop");
      r.cache_in_transit = f.boolean("cache_in_transit", false);
      f.done();
      c.routes.push_back(std::move(r));
    }
  }
  if (const json* arr = root.array("files")) {
    for (std::size_t i = 0; i < arr->size(); ++i) c.files.push_back(parse_file_set((*arr)[i], element("files", i)));
  }
  if (auto csv = root.opt_string("catalog_csv")) {
    std::filesystem::path p(*csv);
    c.catalog_csv = p.is_relative() && !base_dir.empty() ? base_dir / p : p;
  }
  c.catalog_archive = root.opt_string("catalog_archive");
  if (const json* arr = root.array("datasets")) {
    for (std::size_t i = 0; i < arr->size(); ++i) c.datasets.push_back(parse_dataset((*arr)[i], element("datasets", i)));
  }
  if (const json* arr = root.array("workloads")) {
    for (std::size_t i = 0; i < arr->size(); ++i) {
      c.workloads.push_back(parse_workload((*arr)[i], element("workloads", i)));
    }
  }
  root.done();
  validate(c);
  return c;
}

ScenarioConfig load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::io_error, "cannot read '" + path.string() + "'");
  std::ostringstream text;
  text << in.rdbuf();
  return parse_scenario(text.str(), path.parent_path());
}

std::string error_json(const Error& error) {
  json j;
  j["error"] = std::string(to_string(error.code()));
  if (const auto* ce = dynamic_cast<const ConfigError*>(&error)) {
    j["field"] = ce->field_path();
    j["message"] = ce->detail();
  } else {
    j["message"] = error.what();
  }
  return j.dump();
}

std::unique_ptr<Grid> build_grid(const ScenarioConfig& config, std::uint64_t seed) {
  auto grid = std::make_unique<Grid>(seed);
  Fabric& fabric = grid->fabric();
  fabric.set_default_link(config.default_link);
  fabric.set_retry_budget(config.retry_budget);
  for (const auto& l : config.domain_links) fabric.add_domain_link(l.a, l.b, l.spec);
  for (const auto& s : config.stations) grid->add_station(s);
  for (const auto& m : config.mss) grid->add_mss(m.library, m.domain);
  for (const auto& l : config.links) fabric.add_link(l.a, l.b, l.spec);
  for (const auto& r : config.routes) {
    grid->routes().add_route(r.station, r.destination, r.next_hop);
    if (r.cache_in_transit) grid->routes().set_cache_in_transit(r.station, true);
  }
  if (config.corruption_probability > 0.0) {
    grid->set_fault_profile(FaultProfile::uniform(config.corruption_probability));
  }

  Catalog& catalog = grid->catalog();
  declare_files(config, catalog, [&](FileId id, std::size_t set_index) {
    const auto& set = config.files[set_index];
    if (set.archive_to) grid->mss(*set.archive_to).library().preload(id);
    for (const auto& sid : set.cached_at) {
      StationCache& cache = grid->station(sid).cache();
      admit_into_station(cache, catalog, sid, id, set.size_bytes, effective_group(cache, ""), 0.0);
      catalog.add_replica(id, Location::station(sid, cache.placement_node(id)));
    }
  });
  if (config.catalog_csv) {
    std::ifstream in(*config.catalog_csv);
    if (!in) throw Error(ErrorCode::io_error, "cannot open '" + config.catalog_csv->string() + "'");
    const auto ids = catalog.load_bootstrap_csv(in);
    if (config.catalog_archive) {
      for (FileId id : ids) grid->mss(*config.catalog_archive).library().preload(id);
    }
  }
  for (const auto& d : config.datasets) catalog.define_dataset(d.name, predicate_of(d, catalog));
  return grid;
}

std::vector<TraceRecord> generate_trace(const ScenarioConfig& config, const Grid& grid, std::uint64_t seed,
                                        double days) {
  std::vector<TraceRecord> all;
  for (std::size_t i = 0; i < config.workloads.size(); ++i) {
    const auto& w = config.workloads[i];
    WorkloadProfile p;
    p.name = w.name;
    p.kind = w.kind;
    p.station_id = w.station;
    p.group = w.group;
    if (w.kind != WorkloadKind::mc_import) p.file_population = *grid.catalog().find_dataset(w.dataset);
    p.reuse_skew = w.reuse_skew;
    p.arrival_rate = w.arrival_rate;
    p.consumers_per_project = w.consumers;
    p.think_time = w.think_time;
    p.start = w.start_day * kSecondsPerDay;
    p.duration = std::min(days, w.duration_days ? w.start_day + *w.duration_days : days);
    p.seed = mix64(seed + i + 1);
    p.files_per_project = w.files_per_project;
    p.archive = w.archive;
    p.file_size = w.file_size;
    auto part = generate(p, grid.catalog());
    all.insert(all.end(), std::make_move_iterator(part.begin()), std::make_move_iterator(part.end()));
  }
  sort_trace(all);
  return all;
}

namespace {

std::string summarize(const ScenarioConfig& config, std::uint64_t seed, double days, const Grid& grid,
                      const RunOutputs& out) {
  std::ostringstream s;
  s << "scenario          " << config.name << '\n'
    << "seed              " << seed << '\n'
    << "days              " << detail::fixed(days) << '\n'
    << "events_fired      " << out.kernel.events_fired << '\n'
    << "projects_started  " << out.replay.projects_started << '\n'
    << "files_delivered   " << out.replay.files_delivered << '\n'
    << "files_released    " << out.replay.files_released << '\n'
    << "failed_deliveries " << out.replay.failed_deliveries << '\n'
    << "imports           " << out.replay.imports_archived << " archived of " << out.replay.imports_started
    << " started, " << out.replay.imports_failed << " failed\n"
    << "transfers         " << out.transfers << " (" << out.retried_transfers << " retried, "
    << out.failed_transfers << " failed, " << out.corrupted_attempts << " corrupted attempts)\n\n";

  s << std::left << std::setw(20) << "station" << std::right << std::setw(16) << "consumed_bytes"
    << std::setw(16) << "delivered_in" << std::setw(12) << "factor" << std::setw(10) << "peak_day"
    << std::setw(12) << "peak_factor" << '\n';
  for (const auto& sum : out.report.summaries) {
    if (!grid.has_station(sum.station)) continue;
    s << std::left << std::setw(20) << sum.station << std::right << std::setw(16) << sum.consumed_bytes
      << std::setw(16) << sum.delivered_in_bytes << std::setw(12) << sum.mult_factor << std::setw(10)
      << (sum.peak_day ? std::to_string(*sum.peak_day) : "-") << std::setw(12) << sum.peak_mult_factor << '\n';
  }
  s << '\n'
    << std::left << std::setw(20) << "mss" << std::right << std::setw(16) << "written_bytes" << std::setw(16)
    << "read_bytes" << std::setw(12) << "read/write" << '\n';
  for (const auto& id : grid.mss_ids()) {
    const auto written = grid.metrics().total(id, Metric::mss_written_bytes);
    const auto read = grid.metrics().total(id, Metric::mss_read_bytes);
    s << std::left << std::setw(20) << id << std::right << std::setw(16) << written << std::setw(16) << read
      << std::setw(12) << format_factor(read, written) << '\n';
  }
  s << "\naudit             " << (out.audit.ok ? "ok" : "FAILED") << " (" << out.audit.checks << " checks)\n";
  for (const auto& f : out.audit.failures) s << "  " << f << '\n';
  return s.str();
}

}  // namespace

RunOutputs run_scenario(const ScenarioConfig& config, const RunOptions& options) {
  const std::uint64_t seed = options.seed.value_or(config.seed);
  const double days = options.until_days.value_or(config.duration_days);
  if (!(days > 0.0)) throw Error(ErrorCode::invalid_argument, "run length must be > 0 days");

  auto grid = build_grid(config, seed);
  const auto trace = generate_trace(config, *grid, seed, days);
  RunOutputs out;
  {
    std::ostringstream s;
    write_trace(trace, s);
    out.trace_csv = s.str();
  }
  Replayer replayer(*grid);
  replayer.load(trace);
  out.kernel = grid->kernel().run_until(days * kSecondsPerDay);
  out.replay = replayer.stats();

  for (const auto& e : grid->fabric().log()) {
    ++out.transfers;
    if (e.verdict == Verdict::retried) ++out.retried_transfers;
    if (e.verdict == Verdict::corrupted) ++out.failed_transfers;
  }
  out.corrupted_attempts = grid->fabric().corrupted_attempts();

  std::vector<std::string> nodes = grid->station_ids();
  for (const auto& id : grid->mss_ids()) nodes.push_back(id);
  const auto last_day = std::max<std::int64_t>(0, static_cast<std::int64_t>(std::ceil(days)) - 1);
  out.report = grid->metrics().report(nodes, 0, last_day);
  out.audit = grid->audit();

  std::ostringstream transfers, mss, metrics, projects;
  grid->fabric().write_log(transfers);
  grid->write_mss_log(mss);
  write_report_csv(out.report, metrics);
  write_project_reports(grid->project_reports(), projects);
  out.transfers_csv = transfers.str();
  out.mss_csv = mss.str();
  out.metrics_csv = metrics.str();
  out.projects_csv = projects.str();
  out.summary_txt = summarize(config, seed, days, *grid, out);
  return out;
}

void write_outputs(const RunOutputs& outputs, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::io_error, "cannot create '" + dir.string() + "': " + ec.message());
  const std::pair<const char*, const std::string*> files[] = {
      {"trace.csv", &outputs.trace_csv},       {"transfers.csv", &outputs.transfers_csv},
      {"mss.csv", &outputs.mss_csv},           {"metrics.csv", &outputs.metrics_csv},
      {"projects.csv", &outputs.projects_csv}, {"summary.txt", &outputs.summary_txt},
  };
  for (const auto& [name, text] : files) {
    const auto path = dir / name;
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << *text;
    if (!out) throw Error(ErrorCode::io_error, "cannot write '" + path.string() + "'");
  }
}

}  // namespace samdh
