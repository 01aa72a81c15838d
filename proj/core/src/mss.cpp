#include "samdh/mss.hpp"

#include <algorithm>
#include <limits>

#include "samdh/catalog.hpp"
#include "samdh/error.hpp"
#include "samdh/metrics.hpp"
#include "text.hpp"

namespace samdh {

std::string_view to_string(TapeOp op) noexcept { return op == TapeOp::store ? "store" : "fetch"; }

void TapeLibraryConfig::validate() const {
  if (id.empty()) throw Error(ErrorCode::invalid_argument, "mss id must not be empty");
  if (drives < 1) throw Error(ErrorCode::invalid_argument, "mss needs at least one drive");
  if (!(mount_latency >= 0.0)) throw Error(ErrorCode::invalid_argument, "mount latency must be >= 0");
  if (!(drive_rate > 0.0)) throw Error(ErrorCode::invalid_argument, "drive rate must be > 0");
  if (tape_capacity == 0) throw Error(ErrorCode::invalid_argument, "tape capacity must be > 0");
}

TapeLibrary::TapeLibrary(TapeLibraryConfig config, Catalog& catalog)
    : config_(std::move(config)), catalog_(catalog) {
  config_.validate();
  drives_.resize(config_.drives);
}

TapePosition TapeLibrary::place(FileId file, Bytes size) {
  if (size > config_.tape_capacity) {
    throw Error(ErrorCode::too_large, "file " + to_string(file) + " does not fit on one tape");
  }
  if (tape_used_.empty() || tape_used_.back() + size > config_.tape_capacity) tape_used_.push_back(0);
  const auto tape = static_cast<std::uint32_t>(tape_used_.size() - 1);
  const TapePosition pos{tape, tape_used_.back()};
  tape_used_.back() += size;
  placement_.emplace(file, pos);
  return pos;
}

TapeRequest TapeLibrary::store(FileId file, SimTime now) {
  const FileRecord& record = catalog_.file(file);
  if (placement_.contains(file)) {
    throw Error(ErrorCode::already_archived, "file " + to_string(file) + " is already on tape");
  }
  const TapePosition pos = place(file, record.size);
  TapeRequest req;
  req.id = next_request_id_++;
  req.kind = TapeOp::store;
  req.file = file;
  req.size = record.size;
  req.tape = pos.tape;
  req.enqueued = now;
  queue_.push_back(req);
  return req;
}

TapePosition TapeLibrary::preload(FileId file) {
  const FileRecord& record = catalog_.file(file);
  if (placement_.contains(file)) {
    throw Error(ErrorCode::already_archived, "file " + to_string(file) + " is already on tape");
  }
  const TapePosition pos = place(file, record.size);
  archived_[file] = true;
  if (!catalog_.replica_at(file, Location::mss(config_.id))) catalog_.add_replica(file, Location::mss(config_.id));
  return pos;
}

TapeRequest TapeLibrary::fetch(FileId file, std::string destination, SimTime now) {
  const FileRecord& record = catalog_.file(file);
  if (!is_archived(file)) throw Error(ErrorCode::not_archived, "file " + to_string(file) + " is not archived");
  TapeRequest req;
  req.id = next_request_id_++;
  req.kind = TapeOp::fetch;
  req.file = file;
  req.size = record.size;
  req.tape = placement_.at(file).tape;
  req.destination = std::move(destination);
  req.enqueued = now;
  queue_.push_back(req);
  return req;
}

bool TapeLibrary::is_archived(FileId file) const {
  auto it = archived_.find(file);
  return it != archived_.end() && it->second;
}

std::optional<TapePosition> TapeLibrary::placement(FileId file) const {
  auto it = placement_.find(file);
  if (it == placement_.end()) return std::nullopt;
  return it->second;
}

std::size_t TapeLibrary::in_service() const {
  return static_cast<std::size_t>(std::count_if(drives_.begin(), drives_.end(), [](const Drive& d) { return d.busy.has_value(); }));
}

std::optional<std::size_t> TapeLibrary::choose(std::size_t drive_index, SimTime t) const {
  const Drive& drive = drives_[drive_index];
  auto mounted_elsewhere = [&](std::uint32_t tape) {
    for (std::size_t i = 0; i < drives_.size(); ++i) {
      if (i != drive_index && drives_[i].mounted == tape) return true;
    }
    return false;
  };
  std::optional<std::size_t> oldest;
  for (std::size_t i = 0; i < queue_.size(); ++i) {
    const TapeRequest& r = queue_[i];
    if (r.enqueued > t || mounted_elsewhere(r.tape)) continue;
    if (drive.mounted == r.tape) return i;  // queue is FIFO, first hit is the oldest
    if (!oldest) oldest = i;
  }
  return oldest;
}

void TapeLibrary::register_completion(TapeRequest& request) {
  if (request.kind == TapeOp::store) {
    archived_[request.file] = true;
    const Location here = Location::mss(config_.id);
    if (!catalog_.replica_at(request.file, here)) catalog_.add_replica(request.file, here);
  }
  completed_.push_back(request);
}

std::vector<TapeRequest> TapeLibrary::drain(SimTime until) {
  constexpr SimTime kNever = std::numeric_limits<SimTime>::infinity();
  std::vector<TapeRequest> done;
  for (;;) {
    SimTime t = kNever;
    for (std::size_t d = 0; d < drives_.size(); ++d) {
      const Drive& drive = drives_[d];
      if (drive.busy) {
        t = std::min(t, *drive.busy->service_end);
        continue;
      }
      for (const TapeRequest& r : queue_) {
        bool blocked = false;
        for (std::size_t o = 0; o < drives_.size(); ++o) {
          if (o != d && drives_[o].mounted == r.tape) blocked = true;
        }
        if (!blocked) t = std::min(t, std::max(drive.free_at, r.enqueued));
      }
    }
    if (t == kNever || t > until) break;

    for (Drive& drive : drives_) {
      if (drive.busy && *drive.busy->service_end == t) {
        register_completion(*drive.busy);
        done.push_back(*drive.busy);
        drive.busy.reset();
        drive.free_at = t;
      }
    }
    for (std::size_t d = 0; d < drives_.size(); ++d) {
      Drive& drive = drives_[d];
      if (drive.busy || drive.free_at > t) continue;
      auto pick = choose(d, t);
      if (!pick) continue;
      TapeRequest req = queue_[*pick];
      queue_.erase(queue_.begin() + static_cast<std::ptrdiff_t>(*pick));
      req.mounted = drive.mounted != req.tape;
      req.drive = static_cast<std::uint32_t>(d);
      req.service_start = t;
      req.service_end = t + (req.mounted ? config_.mount_latency : 0.0) +
                        static_cast<double>(req.size) / config_.drive_rate;
      drive.mounted = req.tape;
      drive.busy = std::move(req);
    }
  }
  return done;
}

std::optional<SimTime> TapeLibrary::next_completion() const {
  std::optional<SimTime> next;
  for (const Drive& d : drives_) {
    if (d.busy && (!next || *d.busy->service_end < *next)) next = *d.busy->service_end;
  }
  return next;
}

void write_mss_log_header(std::ostream& out) { out << "t_complete,kind,file_id,tape_id,mounted\n"; }

void TapeLibrary::write_log(std::ostream& out) const {
  write_mss_log_header(out);
  for (const auto& r : completed_) {
    out << detail::fixed(*r.service_end, 6) << ',' << to_string(r.kind) << ',' << r.file.value << ',' << r.tape
        << ',' << (r.mounted ? 1 : 0) << '\n';
  }
}

MssService::MssService(TapeLibraryConfig config, Catalog& catalog, Kernel& kernel, MetricsLedger& metrics)
    : library_(std::move(config), catalog), kernel_(kernel), metrics_(metrics) {}

void MssService::store(FileId file, Callback on_done) {
  const TapeRequest req = library_.store(file, kernel_.now());
  callbacks_.emplace(req.id, std::move(on_done));
  pump();
}

void MssService::fetch(FileId file, const std::string& destination, Callback on_done) {
  const TapeRequest req = library_.fetch(file, destination, kernel_.now());
  callbacks_.emplace(req.id, std::move(on_done));
  pump();
}

void MssService::pump() {
  auto finished = library_.drain(kernel_.now());
  for (const auto& r : finished) {
    const auto bytes = static_cast<std::int64_t>(r.size);
    if (r.kind == TapeOp::store) {
      metrics_.record(LedgerEvent::mss_write, id(), bytes, 1, *r.service_end);
      written_ += r.size;
    } else {
      metrics_.record(LedgerEvent::mss_read, id(), bytes, 1, *r.service_end);
      read_ += r.size;
    }
  }

  const auto next = library_.next_completion();
  if (next != wake_at_) {
    if (wake_) kernel_.cancel(*wake_);
    wake_.reset();
    wake_at_ = next;
    if (next) {
      wake_ = kernel_.schedule_at(*next, [this] {
        wake_.reset();
        wake_at_.reset();
        pump();
      });
    }
  }

  for (const auto& r : finished) {
    auto it = callbacks_.find(r.id);
    if (it == callbacks_.end()) continue;
    Callback cb = std::move(it->second);
    callbacks_.erase(it);
    if (cb) cb(r);
  }
}

}  // namespace samdh
