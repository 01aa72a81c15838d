#include "samdh/forwarder.hpp"

#include <memory>

#include "samdh/catalog.hpp"
#include "samdh/error.hpp"
#include "samdh/metrics.hpp"
#include "samdh/route_table.hpp"
#include "samdh/simkernel.hpp"

namespace samdh {

AdmitResult admit_into_station(StationCache& cache, Catalog& catalog, const std::string& station, FileId file,
                               Bytes size, std::string_view group, SimTime now) {
  AdmitResult result = cache.admit(file, size, group, now);
  const Location here = Location::station(station);
  for (FileId victim : result.evicted) {
    if (catalog.replica_at(victim, here)) catalog.remove_replica(victim, here);
  }
  return result;
}

std::string effective_group(const StationCache& cache, std::string_view group) {
  const auto& shares = cache.config().group_shares;
  if (shares.contains(group)) return std::string(group);
  return shares.begin()->first;
}

struct Forwarder::Job {
  FileId file;
  Bytes size = 0;
  std::uint32_t crc = 0;
  std::vector<std::string> path;
  ForwardOptions options;
  Callback on_done;
  std::size_t hop = 0;  // index of the node currently holding the file
  bool pinned_here = false;
  ForwardResult result;
};

Forwarder::Forwarder(Kernel& kernel, Catalog& catalog, const RouteTable& routes, Fabric& fabric,
                     MetricsLedger& metrics, CacheLookup caches)
    : kernel_(kernel), catalog_(catalog), routes_(routes), fabric_(fabric), metrics_(metrics),
      caches_(std::move(caches)) {}

void Forwarder::forward_file(FileId file, std::vector<std::string> path, ForwardOptions options,
                             Callback on_done) {
  const FileRecord& record = catalog_.file(file);
  if (path.empty()) throw Error(ErrorCode::invalid_argument, "empty forwarding path");
  for (const auto& node : path) routes_.kind_of(node);
  for (std::size_t i = 0; i + 1 < path.size(); ++i) {
    if (path[i] == path[i + 1]) throw Error(ErrorCode::invalid_argument, "path repeats node '" + path[i] + "'");
    fabric_.link_spec(path[i], path[i + 1]);
  }
  const auto head_kind = routes_.kind_of(path.front());
  const Location head = head_kind == NodeKind::mss ? Location::mss(path.front()) : Location::station(path.front());
  if (!catalog_.replica_at(file, head)) {
    throw Error(ErrorCode::no_replica, "file " + to_string(file) + " has no replica at path head " + head.str());
  }

  auto job = std::make_shared<Job>();
  job->file = file;
  job->size = record.size;
  job->crc = record.crc;
  job->path = std::move(path);
  job->options = std::move(options);
  job->on_done = std::move(on_done);

  if (job->path.size() == 1) {
    job->result.ok = true;
    if (StationCache* cache = head_kind == NodeKind::station ? caches_(job->path.front()) : nullptr) {
      job->result.destination_cached = cache->contains(file);
    }
    kernel_.schedule(0.0, [job] { job->on_done(job->result); });
    return;
  }
  if (StationCache* cache = head_kind == NodeKind::station ? caches_(job->path.front()) : nullptr) {
    if (cache->contains(file)) {
      cache->set_pin(file, +1);
      job->pinned_here = true;
    }
  }
  run_hop(std::move(job));
}

void Forwarder::run_hop(std::shared_ptr<Job> job) {
  TransferRequest request{job->file, job->size, job->crc, job->path[job->hop], job->path[job->hop + 1]};
  const auto override = job->options.hop_faults.find(job->hop);
  const FaultProfile& faults =
      override != job->options.hop_faults.end() ? override->second : job->options.faults;
  fabric_.transfer(std::move(request), faults,
                   [this, job](const TransferEvent& event) { arrive(job, event); });
}

void Forwarder::arrive(std::shared_ptr<Job> job, const TransferEvent& event) {
  job->result.hops.push_back(event);
  const std::string& from = job->path[job->hop];
  if (job->pinned_here) {
    if (StationCache* cache = caches_(from)) cache->set_pin(job->file, -1);
    job->pinned_here = false;
  }
  if (!event.delivered()) {
    job->result.ok = false;
    job->result.error = "stage_failed: " + from + " -> " + event.dst + " checksum mismatch after " +
                        std::to_string(event.attempts) + " attempts";
    job->on_done(job->result);
    return;
  }

  const SimTime now = kernel_.now();
  const auto bytes = static_cast<std::int64_t>(job->size);
  metrics_.record(LedgerEvent::send_out, from, bytes, 1, now);
  ++job->hop;
  const std::string& here = job->path[job->hop];
  const bool at_station = routes_.kind_of(here) == NodeKind::station;
  const bool last = job->hop + 1 == job->path.size();
  if (at_station) metrics_.record(LedgerEvent::deliver_in, here, bytes, 1, now);

  StationCache* cache = at_station ? caches_(here) : nullptr;
  const Location location = Location::station(here);
  if (cache && (last || routes_.cache_in_transit(here))) {
    bool cached = cache->contains(job->file);
    if (!cached && job->size <= cache->quota()) {
      cached = admit_into_station(*cache, catalog_, here, job->file, job->size,
                                  effective_group(*cache, job->options.group), now)
                   .admitted;
    }
    if (cached && !catalog_.replica_at(job->file, location)) {
      catalog_.add_replica(job->file, Location::station(here, cache->placement_node(job->file)));
      if (!last) job->result.transit_replicas.push_back(here);
    }
    if (last) job->result.destination_cached = cached;
  }

  if (last) {
    job->result.ok = true;
    job->on_done(job->result);
    return;
  }
  if (cache && cache->contains(job->file)) {
    cache->set_pin(job->file, +1);
    job->pinned_here = true;
  }
  run_hop(std::move(job));
}

}  // namespace samdh
