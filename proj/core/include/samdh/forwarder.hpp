#pragma once

#include <functional>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "samdh/cache.hpp"
#include "samdh/fabric.hpp"
#include "samdh/types.hpp"

namespace samdh {

class Catalog;
class Kernel;
class MetricsLedger;
class RouteTable;

struct ForwardOptions {
  /// Cache group charged for replicas made along the way. Stations that do
  /// not share this group charge their lexicographically first group.
  std::string group;
  FaultProfile faults;
  /// Replaces `faults` on particular hops (0 = first hop), for fault
  /// injection.
  std::map<std::size_t, FaultProfile> hop_faults;
};

struct ForwardResult {
  bool ok = false;
  std::vector<TransferEvent> hops;
  /// Intermediate stations that kept a replica.
  std::vector<std::string> transit_replicas;
  /// Whether the final station holds the file in its cache.
  bool destination_cached = false;
  std::string error;
};

/// Admits a file into a station cache and drops catalog replicas of
/// whatever the admission evicted. Returns the cache's verdict.
AdmitResult admit_into_station(StationCache& cache, Catalog& catalog, const std::string& station, FileId file,
                               Bytes size, std::string_view group, SimTime now);

/// Picks `group` if the cache shares it, else its first group.
std::string effective_group(const StationCache& cache, std::string_view group);

/// Moves a file hop by hop along a path produced by RouteTable.
///
/// Each hop is one CRC-verified fabric transfer. Intermediate stations with
/// transit caching keep a replica when their cache admits the file; a
/// rejected admission does not stop the file. A station at the end of the
/// path gets a catalog replica if the file is (or becomes) cached there.
/// Arrivals count as delivered_in at station nodes and departures as
/// sent_out at the source node.
class Forwarder {
public:
  using CacheLookup = std::function<StationCache*(std::string_view station)>;
  using Callback = std::function<void(const ForwardResult&)>;

  Forwarder(Kernel& kernel, Catalog& catalog, const RouteTable& routes, Fabric& fabric, MetricsLedger& metrics,
            CacheLookup caches);

  /// Throws unknown_station or no_link for a malformed path, and
  /// no_replica when the head holds no replica. Hop failures are reported
  /// through the callback with ok == false.
  void forward_file(FileId file, std::vector<std::string> path, ForwardOptions options, Callback on_done);

private:
  struct Job;
  void run_hop(std::shared_ptr<Job> job);
  void arrive(std::shared_ptr<Job> job, const TransferEvent& event);

  Kernel& kernel_;
  Catalog& catalog_;
  const RouteTable& routes_;
  Fabric& fabric_;
  MetricsLedger& metrics_;
  CacheLookup caches_;
};

}  // namespace samdh
