#include "samdh/grid.hpp"

#include <algorithm>
#include <tuple>

#include "samdh/error.hpp"
#include "text.hpp"

namespace samdh {

Grid::Grid(std::uint64_t seed)
    : fabric_(kernel_, mix64(seed ^ 0xFAB51Cull)),
      forwarder_(kernel_, catalog_, routes_, fabric_, metrics_, [this](std::string_view id) -> StationCache* {
        auto it = stations_.find(id);
        return it == stations_.end() ? nullptr : &it->second->cache();
      }) {
  fabric_.set_domain_resolver([this](std::string_view id) -> std::optional<std::string> {
    if (routes_.has_node(id)) return routes_.domain_of(id);
    return std::nullopt;
  });
}

Grid::~Grid() = default;

Station& Grid::add_station(StationConfig config) {
  config.validate();
  const std::string id = config.id;
  routes_.add_node(id, config.domain, NodeKind::station);
  if (config.cache.mode == CacheMode::nfs_shared) {
    fabric_.add_link(id, id + "#nfs", LinkSpec{config.nfs_server_bandwidth, 0.0});
  }
  auto station = std::make_unique<Station>(std::move(config), *this);
  return *stations_.emplace(id, std::move(station)).first->second;
}

MssService& Grid::add_mss(TapeLibraryConfig config, const std::string& domain) {
  config.validate();
  const std::string id = config.id;
  routes_.add_node(id, domain, NodeKind::mss);
  auto service = std::make_unique<MssService>(std::move(config), catalog_, kernel_, metrics_);
  return *mss_.emplace(id, std::move(service)).first->second;
}

bool Grid::has_station(std::string_view id) const { return stations_.find(id) != stations_.end(); }
bool Grid::has_mss(std::string_view id) const { return mss_.find(id) != mss_.end(); }

Station& Grid::station(std::string_view id) {
  return const_cast<Station&>(std::as_const(*this).station(id));
}

const Station& Grid::station(std::string_view id) const {
  auto it = stations_.find(id);
  if (it == stations_.end()) throw Error(ErrorCode::unknown_station, "unknown station '" + std::string(id) + "'");
  return *it->second;
}

MssService& Grid::mss(std::string_view id) { return const_cast<MssService&>(std::as_const(*this).mss(id)); }

const MssService& Grid::mss(std::string_view id) const {
  auto it = mss_.find(id);
  if (it == mss_.end()) throw Error(ErrorCode::unknown_station, "unknown mss '" + std::string(id) + "'");
  return *it->second;
}

std::vector<std::string> Grid::station_ids() const {
  std::vector<std::string> ids;
  for (const auto& [id, s] : stations_) ids.push_back(id);
  return ids;
}

std::vector<std::string> Grid::mss_ids() const {
  std::vector<std::string> ids;
  for (const auto& [id, m] : mss_) ids.push_back(id);
  return ids;
}

FileId Grid::import_file(const std::string& source, FileSpec spec, const std::string& archive,
                         std::function<void(bool)> done) {
  Station& src = station(source);
  mss(archive);
  auto path = routes_.compute_path(source, archive);

  spec.declared_at = kernel_.now();
  const FileId id = catalog_.declare_file(std::move(spec));
  const Bytes size = catalog_.file(id).size;
  const std::string group = effective_group(src.cache(), "");
  bool cached = false;
  if (size <= src.cache().quota()) {
    cached = admit_into_station(src.cache(), catalog_, source, id, size, group, kernel_.now()).admitted;
  }
  catalog_.add_replica(id, Location::station(source, src.cache().placement_node(id)),
                       cached ? ReplicaState::cached : ReplicaState::staging);

  forwarder_.forward_file(id, std::move(path), ForwardOptions{.group = group, .faults = faults_, .hop_faults = {}},
                          [this, id, source, archive, cached, done = std::move(done)](const ForwardResult& r) {
                            if (!cached) catalog_.remove_replica(id, Location::station(source));
                            if (!r.ok) {
                              if (done) done(false);
                              return;
                            }
                            mss(archive).store(id, [done](const TapeRequest&) {
                              if (done) done(true);
                            });
                          });
  return id;
}

AuditReport Grid::audit() const {
  AuditReport report;
  auto fail = [&](std::string msg) {
    report.ok = false;
    report.failures.push_back(std::move(msg));
  };
  for (const auto& node : routes_.nodes()) {
    std::uint64_t in = 0;
    std::uint64_t out = 0;
    for (const auto& e : fabric_.log()) {
      if (!e.delivered()) continue;
      if (e.dst == node) in += e.size;
      if (e.src == node) out += e.size;
    }
    const bool is_station = routes_.kind_of(node) == NodeKind::station;
    const auto ledger_in = metrics_.total(node, Metric::delivered_in_bytes);
    const auto ledger_out = metrics_.total(node, Metric::sent_out_bytes);
    ++report.checks;
    if (ledger_in != (is_station ? in : 0)) {
      fail(node + ": delivered_in " + std::to_string(ledger_in) + " != transfer log " + std::to_string(in));
    }
    ++report.checks;
    if (ledger_out != out) {
      fail(node + ": sent_out " + std::to_string(ledger_out) + " != transfer log " + std::to_string(out));
    }
  }
  for (const auto& [id, service] : mss_) {
    std::uint64_t stored = 0;
    std::uint64_t fetched = 0;
    for (const auto& r : service->library().completed()) {
      (r.kind == TapeOp::store ? stored : fetched) += r.size;
    }
    ++report.checks;
    if (metrics_.total(id, Metric::mss_written_bytes) != stored || service->written_bytes() != stored) {
      fail(id + ": mss_written does not match completed stores (" + std::to_string(stored) + ")");
    }
    ++report.checks;
    if (metrics_.total(id, Metric::mss_read_bytes) != fetched || service->read_bytes() != fetched) {
      fail(id + ": mss_read does not match completed fetches (" + std::to_string(fetched) + ")");
    }
  }
  return report;
}

void Grid::write_mss_log(std::ostream& out) const {
  struct Row {
    SimTime t;
    std::string mss;
    std::size_t order;
    const TapeRequest* req;
  };
  std::vector<Row> rows;
  for (const auto& [id, service] : mss_) {
    const auto& done = service->library().completed();
    for (std::size_t i = 0; i < done.size(); ++i) rows.push_back(Row{*done[i].service_end, id, i, &done[i]});
  }
  std::stable_sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
    return std::tie(a.t, a.mss, a.order) < std::tie(b.t, b.mss, b.order);
  });
  write_mss_log_header(out);
  for (const auto& row : rows) {
    const auto& r = *row.req;
    out << detail::fixed(row.t, 6) << ',' << to_string(r.kind) << ',' << r.file.value << ',' << r.tape << ','
        << (r.mounted ? 1 : 0) << '\n';
  }
}

std::vector<ProjectReport> Grid::project_reports() const {
  std::vector<ProjectReport> all;
  for (const auto& [id, s] : stations_) {
    auto r = s->project_reports();
    all.insert(all.end(), r.begin(), r.end());
  }
  return all;
}

}  // namespace samdh
