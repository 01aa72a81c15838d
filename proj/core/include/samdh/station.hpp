#pragma once

#include <deque>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "samdh/cache.hpp"
#include "samdh/types.hpp"

namespace samdh {

class Grid;

enum class DeliveryMode { copy_to_cache, network_attached };

std::string_view to_string(DeliveryMode mode) noexcept;
std::optional<DeliveryMode> parse_delivery_mode(std::string_view text) noexcept;

struct StationConfig {
  std::string id;
  std::string domain;
  CacheConfig cache;
  std::uint32_t consumer_slots = 1;
  DeliveryMode delivery_mode = DeliveryMode::copy_to_cache;
  std::uint32_t max_concurrent_stages = 1;
  /// Server link every worker read crosses in nfs_shared mode.
  double nfs_server_bandwidth = 100e6;

  void validate() const;
};

enum class ProjectState { running, draining, done };

std::string_view to_string(ProjectState state) noexcept;

enum class HandleKind { local, remote_stream };

struct Delivery {
  std::string project;
  std::uint32_t consumer = 0;
  FileId file;
  HandleKind handle = HandleKind::local;
  bool end_of_stream = false;
  bool failed = false;
  SimTime at = 0.0;
};

struct ProjectReport {
  std::string project_id;
  std::string station;
  std::string group;
  std::size_t files = 0;
  Bytes bytes_consumed = 0;
  Bytes bytes_delivered = 0;
  double wall_seconds = 0.0;
  ProjectState state = ProjectState::running;
};

/// CSV `project_id,station,group,files,bytes_consumed,bytes_delivered,wall_seconds`.
void write_project_reports(const std::vector<ProjectReport>& reports, std::ostream& out);

/// The station server. Runs projects that hand a dataset snapshot to
/// consumer slots, one file per idle consumer in snapshot order.
///
/// A miss reserves cache space (admission is serialized here, so there is
/// no race between concurrent stages), then pulls the cheapest replica along
/// its static route, or from tape. At most max_concurrent_stages pulls are
/// in flight; more wait in FIFO order, and a pull whose admission is
/// blocked by pinned entries waits for the next release. Delivered files
/// stay pinned until the consumer releases them. In network_attached mode a
/// miss is read over a held channel from a remote cache and never enters
/// the local one.
class Station {
public:
  using DeliveryCallback = std::function<void(const Delivery&)>;

  Station(StationConfig config, Grid& grid);
  Station(const Station&) = delete;
  Station& operator=(const Station&) = delete;

  const std::string& id() const noexcept { return config_.id; }
  const StationConfig& config() const noexcept { return config_; }
  StationCache& cache() noexcept { return cache_; }
  const StationCache& cache() const noexcept { return cache_; }

  /// Snapshot taken now. Throws unknown_dataset, too_many_consumers,
  /// unknown_group.
  std::string start_project(DatasetId dataset, const std::string& group, std::uint32_t consumers,
                            SimTime think_time = 0.0);
  std::string start_project_with_files(std::vector<FileId> snapshot, const std::string& group,
                                       std::uint32_t consumers, SimTime think_time = 0.0);

  /// Assigns the lowest-index undelivered file to the consumer.
  /// `on_delivered` fires (through the kernel) once the file is available,
  /// with end_of_stream set when nothing is left or failed set when the
  /// stage could not complete. `on_consumed` fires when the consumer has
  /// finished reading it (think time, plus the shared-server read in
  /// nfs_shared mode, or the held channel in network_attached mode).
  /// Throws unknown_project, unknown_consumer, consumer_busy.
  void next_file(const std::string& project, std::uint32_t consumer, DeliveryCallback on_delivered,
                 DeliveryCallback on_consumed = {});

  /// Throws unknown_project, unknown_consumer, not_held.
  void release_file(const std::string& project, std::uint32_t consumer, FileId file);

  ProjectState project_state(const std::string& project) const;
  std::vector<FileId> project_snapshot(const std::string& project) const;
  std::vector<ProjectReport> project_reports() const;
  std::vector<std::string> project_ids() const;

  std::size_t inflight_stages() const noexcept { return active_stages_; }
  std::size_t peak_inflight_stages() const noexcept { return peak_stages_; }
  std::size_t waiting_stages() const noexcept { return pending_.size(); }
  std::uint64_t failed_deliveries() const noexcept { return failed_deliveries_; }
  /// Bytes handed to consumers straight from a resident cache entry.
  std::uint64_t hit_bytes() const noexcept { return hit_bytes_; }
  /// Bytes handed to consumers right after a stage brought them in.
  std::uint64_t staged_bytes() const noexcept { return staged_bytes_; }

  /// Retries stages blocked on admission or the in-flight bound.
  void pump();

private:
  struct Consumer {
    bool busy = false;
    std::optional<FileId> held;
    HandleKind handle = HandleKind::local;
  };

  struct Project {
    std::string id;
    std::string group;
    std::vector<FileId> snapshot;
    std::size_t next_index = 0;
    std::vector<Consumer> consumers;
    std::size_t finished = 0;  // released or failed
    SimTime think_time = 0.0;
    SimTime started_at = 0.0;
    std::optional<SimTime> done_at;
    Bytes bytes_consumed = 0;
    Bytes bytes_delivered = 0;
    ProjectState state = ProjectState::running;
  };

  struct Waiter {
    std::string project;
    std::uint32_t consumer = 0;
    DeliveryCallback on_delivered;
    DeliveryCallback on_consumed;
  };

  struct Stage {
    std::vector<Waiter> waiters;
    std::string initiator;
    std::string group;
    bool active = false;
  };

  Project& project_ref(const std::string& id);
  const Project& project_ref(const std::string& id) const;
  Consumer& consumer_ref(Project& p, std::uint32_t consumer);

  void acquire(FileId file, Waiter waiter);
  void start_stage(FileId file);
  void complete_stage(FileId file);
  void fail_stage(FileId file, const std::string& reason);
  void stream_remote(FileId file, Waiter waiter);
  void deliver(Waiter waiter, FileId file, HandleKind handle);
  void fail_delivery(Waiter waiter, FileId file);
  void finish_one(Project& p);
  void notify(const DeliveryCallback& cb, Delivery delivery);

  StationConfig config_;
  Grid& grid_;
  StationCache cache_;
  std::map<std::string, Project, std::less<>> projects_;
  std::uint64_t project_counter_ = 0;
  std::map<FileId, Stage> stages_;
  std::deque<FileId> pending_;
  std::size_t active_stages_ = 0;
  std::size_t peak_stages_ = 0;
  std::uint64_t failed_deliveries_ = 0;
  std::uint64_t hit_bytes_ = 0;
  std::uint64_t staged_bytes_ = 0;
};

}  // namespace samdh
