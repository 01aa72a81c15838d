#pragma once

#include <functional>
#include <map>
#include <memory>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "samdh/catalog.hpp"
#include "samdh/fabric.hpp"
#include "samdh/forwarder.hpp"
#include "samdh/metrics.hpp"
#include "samdh/mss.hpp"
#include "samdh/route_table.hpp"
#include "samdh/simkernel.hpp"
#include "samdh/station.hpp"

namespace samdh {

struct AuditReport {
  bool ok = true;
  std::vector<std::string> failures;
  std::size_t checks = 0;
};

/// One simulated data-handling deployment: kernel, catalog, routes,
/// fabric, ledger, stations and tape libraries, all on one event loop.
class Grid {
public:
  explicit Grid(std::uint64_t seed);
  Grid(const Grid&) = delete;
  Grid& operator=(const Grid&) = delete;
  ~Grid();

  Kernel& kernel() noexcept { return kernel_; }
  Catalog& catalog() noexcept { return catalog_; }
  const Catalog& catalog() const noexcept { return catalog_; }
  RouteTable& routes() noexcept { return routes_; }
  const RouteTable& routes() const noexcept { return routes_; }
  Fabric& fabric() noexcept { return fabric_; }
  const Fabric& fabric() const noexcept { return fabric_; }
  MetricsLedger& metrics() noexcept { return metrics_; }
  const MetricsLedger& metrics() const noexcept { return metrics_; }
  Forwarder& forwarder() noexcept { return forwarder_; }

  /// Registers the station as a routing node in its domain.
  Station& add_station(StationConfig config);
  MssService& add_mss(TapeLibraryConfig config, const std::string& domain);

  bool has_station(std::string_view id) const;
  bool has_mss(std::string_view id) const;
  /// Throw unknown_station.
  Station& station(std::string_view id);
  const Station& station(std::string_view id) const;
  MssService& mss(std::string_view id);
  const MssService& mss(std::string_view id) const;
  std::vector<std::string> station_ids() const;
  std::vector<std::string> mss_ids() const;

  void set_fault_profile(FaultProfile faults) { faults_ = std::move(faults); }
  const FaultProfile& fault_profile() const noexcept { return faults_; }

  /// A file produced at `source` (e.g. a Monte Carlo site): declared now,
  /// kept in the source cache when it fits, forwarded along the static
  /// route to `archive`, and stored on tape there. `done` receives false if
  /// the forward failed. Returns the new file id.
  FileId import_file(const std::string& source, FileSpec spec, const std::string& archive,
                     std::function<void(bool)> done = {});

  /// Cross-checks the ledger against the transfer and tape logs: per node,
  /// delivered_in and sent_out equal the delivered transfer bytes ending or
  /// starting there, and written/read bytes equal completed tape stores and
  /// fetches.
  AuditReport audit() const;

  /// Completed tape requests of every library, ordered by (time, mss id).
  void write_mss_log(std::ostream& out) const;
  std::vector<ProjectReport> project_reports() const;

private:
  Kernel kernel_;
  Catalog catalog_;
  RouteTable routes_;
  Fabric fabric_;
  MetricsLedger metrics_;
  Forwarder forwarder_;
  FaultProfile faults_;
  std::map<std::string, std::unique_ptr<Station>, std::less<>> stations_;
  std::map<std::string, std::unique_ptr<MssService>, std::less<>> mss_;
};

}  // namespace samdh
