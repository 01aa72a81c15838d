#include "samdh/station.hpp"

#include <algorithm>
#include <cstdio>

#include "samdh/error.hpp"
#include "samdh/forwarder.hpp"
#include "samdh/grid.hpp"
#include "text.hpp"

namespace samdh {

std::string_view to_string(DeliveryMode mode) noexcept {
  return mode == DeliveryMode::copy_to_cache ? "copy_to_cache" : "network_attached";
}

std::optional<DeliveryMode> parse_delivery_mode(std::string_view text) noexcept {
  if (text == "copy_to_cache") return DeliveryMode::copy_to_cache;
  if (text == "network_attached") return DeliveryMode::network_attached;
  return std::nullopt;
}

std::string_view to_string(ProjectState state) noexcept {
  switch (state) {
    case ProjectState::running: return "running";
    case ProjectState::draining: return "draining";
    case ProjectState::done: return "done";
  }
  return "?";
}

void StationConfig::validate() const {
  if (id.empty()) throw Error(ErrorCode::invalid_argument, "station id must not be empty");
  if (domain.empty()) throw Error(ErrorCode::invalid_argument, "station '" + id + "' needs a domain");
  if (consumer_slots < 1) throw Error(ErrorCode::invalid_argument, "consumer_slots must be >= 1");
  if (max_concurrent_stages < 1) throw Error(ErrorCode::invalid_argument, "max_concurrent_stages must be >= 1");
  if (!(nfs_server_bandwidth > 0.0)) throw Error(ErrorCode::invalid_argument, "nfs server bandwidth must be > 0");
  cache.validate();
}

void write_project_reports(const std::vector<ProjectReport>& reports, std::ostream& out) {
  out << "project_id,station,group,files,bytes_consumed,bytes_delivered,wall_seconds\n";
  for (const auto& r : reports) {
    out << r.project_id << ',' << r.station << ',' << r.group << ',' << r.files << ',' << r.bytes_consumed << ','
        << r.bytes_delivered << ',' << detail::fixed(r.wall_seconds) << '\n';
  }
}

Station::Station(StationConfig config, Grid& grid)
    : config_((config.validate(), std::move(config))), grid_(grid), cache_(config_.cache) {}

Station::Project& Station::project_ref(const std::string& id) {
  return const_cast<Project&>(std::as_const(*this).project_ref(id));
}

const Station::Project& Station::project_ref(const std::string& id) const {
  auto it = projects_.find(id);
  if (it == projects_.end()) {
    throw Error(ErrorCode::unknown_project, "no project '" + id + "' at station '" + config_.id + "'");
  }
  return it->second;
}

Station::Consumer& Station::consumer_ref(Project& p, std::uint32_t consumer) {
  if (consumer >= p.consumers.size()) {
    throw Error(ErrorCode::unknown_consumer,
                "project '" + p.id + "' has no consumer " + std::to_string(consumer));
  }
  return p.consumers[consumer];
}

std::string Station::start_project(DatasetId dataset, const std::string& group, std::uint32_t consumers,
                                   SimTime think_time) {
  return start_project_with_files(grid_.catalog().resolve_dataset(dataset), group, consumers, think_time);
}

std::string Station::start_project_with_files(std::vector<FileId> snapshot, const std::string& group,
                                              std::uint32_t consumers, SimTime think_time) {
  if (consumers < 1 || consumers > config_.consumer_slots) {
    throw Error(ErrorCode::too_many_consumers, "station '" + config_.id + "' cannot run " +
                                                   std::to_string(consumers) + " consumers (slots: " +
                                                   std::to_string(config_.consumer_slots) + ")");
  }
  if (!cache_.config().group_shares.contains(group)) {
    throw Error(ErrorCode::unknown_group, "group '" + group + "' has no share at '" + config_.id + "'");
  }
  if (!(think_time >= 0.0)) throw Error(ErrorCode::invalid_argument, "think time must be >= 0");
  for (FileId f : snapshot) grid_.catalog().file(f);

  char suffix[32];
  std::snprintf(suffix, sizeof suffix, "/p%04llu", static_cast<unsigned long long>(++project_counter_));
  Project p;
  p.id = config_.id + suffix;
  p.group = group;
  p.snapshot = std::move(snapshot);
  p.consumers.resize(consumers);
  p.think_time = think_time;
  p.started_at = grid_.kernel().now();
  if (p.snapshot.empty()) {
    p.state = ProjectState::done;
    p.done_at = p.started_at;
  }
  const std::string id = p.id;
  projects_.emplace(id, std::move(p));
  return id;
}

void Station::next_file(const std::string& project, std::uint32_t consumer, DeliveryCallback on_delivered,
                        DeliveryCallback on_consumed) {
  Project& p = project_ref(project);
  Consumer& c = consumer_ref(p, consumer);
  if (c.busy) {
    throw Error(ErrorCode::consumer_busy, "consumer " + std::to_string(consumer) + " of '" + project +
                                              "' still holds or awaits a file");
  }
  Waiter waiter{project, consumer, std::move(on_delivered), std::move(on_consumed)};
  if (p.next_index >= p.snapshot.size()) {
    Delivery eos{project, consumer, FileId{}, HandleKind::local, true, false, grid_.kernel().now()};
    notify(waiter.on_delivered, eos);
    return;
  }
  const FileId file = p.snapshot[p.next_index++];
  c.busy = true;
  if (p.next_index == p.snapshot.size() && p.state == ProjectState::running) p.state = ProjectState::draining;
  acquire(file, std::move(waiter));
}

void Station::acquire(FileId file, Waiter waiter) {
  const SimTime now = grid_.kernel().now();
  if (cache_.contains(file) && !stages_.contains(file)) {
    cache_.touch(file, now);
    cache_.set_pin(file, +1);
    hit_bytes_ += grid_.catalog().file(file).size;
    deliver(std::move(waiter), file, HandleKind::local);
    return;
  }
  if (auto it = stages_.find(file); it != stages_.end()) {
    it->second.waiters.push_back(std::move(waiter));
    return;
  }
  if (config_.delivery_mode == DeliveryMode::network_attached) {
    stream_remote(file, std::move(waiter));
    return;
  }
  Stage stage;
  stage.initiator = waiter.project;
  stage.group = project_ref(waiter.project).group;
  stage.waiters.push_back(std::move(waiter));
  stages_.emplace(file, std::move(stage));
  pending_.push_back(file);
  pump();
}

void Station::pump() {
  Catalog& catalog = grid_.catalog();
  while (active_stages_ < config_.max_concurrent_stages && !pending_.empty()) {
    const FileId file = pending_.front();
    const Bytes size = catalog.file(file).size;
    if (cache_.contains(file)) {
      // Arrived meanwhile as a transit copy.
      pending_.pop_front();
      Stage stage = std::move(stages_.extract(file).mapped());
      for (auto& w : stage.waiters) {
        cache_.touch(file, grid_.kernel().now());
        cache_.set_pin(file, +1);
        hit_bytes_ += size;
        deliver(std::move(w), file, HandleKind::local);
      }
      continue;
    }
    if (size > cache_.quota()) {
      pending_.pop_front();
      fail_stage(file, "file larger than the cache quota");
      continue;
    }
    const auto admitted =
        admit_into_station(cache_, catalog, config_.id, file, size, stages_.at(file).group, grid_.kernel().now());
    if (!admitted.admitted) break;  // head of line waits for a release
    cache_.set_pin(file, +1);
    pending_.pop_front();
    stages_.at(file).active = true;
    ++active_stages_;
    peak_stages_ = std::max(peak_stages_, active_stages_);
    start_stage(file);
  }
}

void Station::start_stage(FileId file) {
  Catalog& catalog = grid_.catalog();
  const RouteTable& routes = grid_.routes();
  std::vector<Replica> replicas;
  try {
    replicas = catalog.locate(file, config_.id, routes);
  } catch (const Error& e) {
    fail_stage(file, e.what());
    return;
  }
  ForwardOptions options{.group = stages_.at(file).group, .faults = grid_.fault_profile(), .hop_faults = {}};
  auto on_forwarded = [this, file](const ForwardResult& result) {
    if (result.ok) {
      complete_stage(file);
    } else {
      fail_stage(file, result.error);
    }
  };

  for (const Replica& r : replicas) {
    if (r.location.is_station() && r.location.id == config_.id) continue;
    if (!routes.hop_count(r.location.id, config_.id)) continue;
    try {
      if (r.location.is_station()) {
        grid_.forwarder().forward_file(file, routes.compute_path(r.location.id, config_.id), options,
                                       on_forwarded);
        return;
      }
      if (!grid_.has_mss(r.location.id)) continue;
      const std::string mss_id = r.location.id;
      grid_.mss(mss_id).fetch(file, config_.id, [this, file, mss_id, options, on_forwarded](const TapeRequest&) {
        try {
          grid_.forwarder().forward_file(file, grid_.routes().compute_path(mss_id, config_.id), options,
                                         on_forwarded);
        } catch (const Error& e) {
          fail_stage(file, e.what());
        }
      });
      return;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::no_link && e.code() != ErrorCode::no_route) throw;
    }
  }
  fail_stage(file, "no reachable replica");
}

void Station::complete_stage(FileId file) {
  Stage stage = std::move(stages_.extract(file).mapped());
  --active_stages_;
  const Bytes size = grid_.catalog().file(file).size;
  if (auto it = projects_.find(stage.initiator); it != projects_.end()) it->second.bytes_delivered += size;
  const SimTime now = grid_.kernel().now();
  for (auto& w : stage.waiters) {
    cache_.set_pin(file, +1);
    cache_.touch(file, now);
    staged_bytes_ += size;
    deliver(std::move(w), file, HandleKind::local);
  }
  cache_.set_pin(file, -1);
  pump();
}

void Station::fail_stage(FileId file, const std::string& /*reason*/) {
  Stage stage = std::move(stages_.extract(file).mapped());
  if (stage.active) {
    --active_stages_;
    if (cache_.set_pin(file, -1) == 0 &&
        !grid_.catalog().replica_at(file, Location::station(config_.id))) {
      cache_.erase(file);
    }
  }
  for (auto& w : stage.waiters) fail_delivery(std::move(w), file);
  pump();
}

void Station::stream_remote(FileId file, Waiter waiter) {
  Catalog& catalog = grid_.catalog();
  const RouteTable& routes = grid_.routes();
  const Bytes size = catalog.file(file).size;
  const SimTime hold = project_ref(waiter.project).think_time;
  std::vector<Replica> replicas;
  try {
    replicas = catalog.locate(file, config_.id, routes);
  } catch (const Error&) {
    fail_delivery(std::move(waiter), file);
    return;
  }

  const Delivery delivery{waiter.project, waiter.consumer, file, HandleKind::remote_stream, false, false, 0.0};
  auto on_close = [this, delivery, cb = waiter.on_consumed](const StreamResult& result) {
    grid_.metrics().record(LedgerEvent::remote_stream, config_.id, static_cast<std::int64_t>(result.bytes), 1,
                           grid_.kernel().now());
    if (cb) {
      Delivery d = delivery;
      d.at = grid_.kernel().now();
      cb(d);
    }
    if (grid_.has_station(result.server)) grid_.station(result.server).pump();
  };

  for (const Replica& r : replicas) {
    if (r.location.id == config_.id || !grid_.fabric().has_link(r.location.id, config_.id)) continue;
    if (r.location.is_station()) {
      Station& server = grid_.station(r.location.id);
      if (!server.cache().contains(file)) continue;
      deliver(std::move(waiter), file, HandleKind::remote_stream);
      grid_.fabric().open_stream(server.cache(), file, size, r.location.id, config_.id, hold, on_close);
      return;
    }
    if (!grid_.has_mss(r.location.id)) continue;
    const std::string mss_id = r.location.id;
    auto shared_waiter = std::make_shared<Waiter>(std::move(waiter));
    grid_.mss(mss_id).fetch(file, config_.id, [this, file, size, hold, mss_id, shared_waiter, on_close](const TapeRequest&) {
      deliver(std::move(*shared_waiter), file, HandleKind::remote_stream);
      grid_.fabric().open_channel(mss_id, config_.id, file, size, hold, on_close);
    });
    return;
  }
  fail_delivery(std::move(waiter), file);
}

void Station::deliver(Waiter waiter, FileId file, HandleKind handle) {
  Project& p = project_ref(waiter.project);
  Consumer& c = consumer_ref(p, waiter.consumer);
  const Bytes size = grid_.catalog().file(file).size;
  const SimTime now = grid_.kernel().now();
  c.held = file;
  c.handle = handle;
  p.bytes_consumed += size;
  grid_.metrics().record(LedgerEvent::consume, config_.id, static_cast<std::int64_t>(size), 1, now);

  const Delivery delivery{waiter.project, waiter.consumer, file, handle, false, false, now};
  notify(waiter.on_delivered, delivery);
  if (handle != HandleKind::local) return;

  auto finish = [this, delivery, think = p.think_time, cb = std::move(waiter.on_consumed)]() {
    grid_.kernel().schedule(think, [this, delivery, cb] {
      if (!cb) return;
      Delivery d = delivery;
      d.at = grid_.kernel().now();
      cb(d);
    });
  };
  if (cache_.config().mode == CacheMode::nfs_shared) {
    grid_.fabric().start_flow(config_.id, config_.id + "#nfs", size, std::move(finish));
  } else {
    finish();
  }
}

void Station::fail_delivery(Waiter waiter, FileId file) {
  ++failed_deliveries_;
  Project& p = project_ref(waiter.project);
  Consumer& c = consumer_ref(p, waiter.consumer);
  c.busy = false;
  c.held.reset();
  notify(waiter.on_delivered,
         Delivery{waiter.project, waiter.consumer, file, HandleKind::local, false, true, grid_.kernel().now()});
  finish_one(p);
}

void Station::finish_one(Project& p) {
  ++p.finished;
  if (p.next_index == p.snapshot.size() && p.finished == p.snapshot.size()) {
    p.state = ProjectState::done;
    p.done_at = grid_.kernel().now();
  }
}

void Station::notify(const DeliveryCallback& cb, Delivery delivery) {
  if (!cb) return;
  grid_.kernel().schedule(0.0, [cb, delivery = std::move(delivery)] { cb(delivery); });
}

void Station::release_file(const std::string& project, std::uint32_t consumer, FileId file) {
  Project& p = project_ref(project);
  Consumer& c = consumer_ref(p, consumer);
  if (!c.held || *c.held != file) {
    throw Error(ErrorCode::not_held, "consumer " + std::to_string(consumer) + " of '" + project +
                                         "' does not hold file " + to_string(file));
  }
  if (c.handle == HandleKind::local) cache_.set_pin(file, -1);
  c.held.reset();
  c.busy = false;
  finish_one(p);
  pump();
}

ProjectState Station::project_state(const std::string& project) const { return project_ref(project).state; }

std::vector<FileId> Station::project_snapshot(const std::string& project) const {
  return project_ref(project).snapshot;
}

std::vector<std::string> Station::project_ids() const {
  std::vector<std::string> ids;
  for (const auto& [id, p] : projects_) ids.push_back(id);
  return ids;
}

std::vector<ProjectReport> Station::project_reports() const {
  std::vector<ProjectReport> out;
  const SimTime now = grid_.kernel().now();
  for (const auto& [id, p] : projects_) {
    ProjectReport r;
    r.project_id = id;
    r.station = config_.id;
    r.group = p.group;
    r.files = p.snapshot.size();
    r.bytes_consumed = p.bytes_consumed;
    r.bytes_delivered = p.bytes_delivered;
    r.wall_seconds = p.done_at.value_or(now) - p.started_at;
    r.state = p.state;
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace samdh
