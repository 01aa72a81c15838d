#pragma once

#include <deque>
#include <functional>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "samdh/simkernel.hpp"
#include "samdh/types.hpp"

namespace samdh {

class Catalog;
class MetricsLedger;

/// Desk-scale defaults; every value is a stated assumption.
struct TapeLibraryConfig {
  std::string id = "enstore";
  std::uint32_t drives = 2;
  double mount_latency = 60.0;    // seconds
  double drive_rate = 30e6;       // bytes per second
  Bytes tape_capacity = 1'000'000'000;

  void validate() const;
};

enum class TapeOp { store, fetch };

std::string_view to_string(TapeOp op) noexcept;

struct TapePosition {
  std::uint32_t tape = 0;
  Bytes offset = 0;
};

struct TapeRequest {
  std::uint64_t id = 0;
  TapeOp kind = TapeOp::store;
  FileId file;
  Bytes size = 0;
  std::uint32_t tape = 0;
  std::string destination;  // fetch target station
  SimTime enqueued = 0.0;
  std::optional<SimTime> service_start;
  std::optional<SimTime> service_end;
  std::optional<std::uint32_t> drive;
  bool mounted = false;  // service included a mount
};

/// Robotic tape library: a pure state machine advanced only by drain().
///
/// Stores append to the current fill tape and open a new tape when it is
/// full. Each drive serves one request at a time. A drive that becomes free
/// takes the oldest eligible request for the tape it already holds, and only
/// then the oldest eligible request overall; a tape mounted in another
/// drive is never taken. Service time is mount_latency (when the drive must
/// switch tapes) plus size / drive_rate.
class TapeLibrary {
public:
  TapeLibrary(TapeLibraryConfig config, Catalog& catalog);

  /// Throws unknown_file, already_archived, too_large.
  TapeRequest store(FileId file, SimTime now);
  /// Throws unknown_file, not_archived.
  TapeRequest fetch(FileId file, std::string destination, SimTime now);
  /// Places a file on tape and registers its archived replica immediately,
  /// with no queueing (pre-existing archive contents).
  TapePosition preload(FileId file);

  /// Starts and completes work up to `until`; returns completions with
  /// service_end <= until in completion order.
  std::vector<TapeRequest> drain(SimTime until);
  /// End time of the earliest in-service request, if any.
  std::optional<SimTime> next_completion() const;

  std::optional<TapePosition> placement(FileId file) const;
  bool is_archived(FileId file) const;
  std::size_t tape_count() const noexcept { return tape_used_.size(); }
  Bytes tape_used(std::uint32_t tape) const { return tape_used_.at(tape); }
  std::size_t queued() const noexcept { return queue_.size(); }
  std::size_t in_service() const;
  std::optional<std::uint32_t> mounted_tape(std::uint32_t drive) const { return drives_.at(drive).mounted; }
  const TapeLibraryConfig& config() const noexcept { return config_; }

  /// Every completed request in completion order.
  const std::vector<TapeRequest>& completed() const noexcept { return completed_; }
  /// CSV `t_complete,kind,file_id,tape_id,mounted(0|1)`.
  void write_log(std::ostream& out) const;

private:
  struct Drive {
    std::optional<std::uint32_t> mounted;
    std::optional<TapeRequest> busy;
    SimTime free_at = 0.0;
  };

  TapePosition place(FileId file, Bytes size);
  std::optional<std::size_t> choose(std::size_t drive_index, SimTime t) const;
  void register_completion(TapeRequest& request);

  TapeLibraryConfig config_;
  Catalog& catalog_;
  std::vector<Drive> drives_;
  std::deque<TapeRequest> queue_;
  std::map<FileId, TapePosition> placement_;
  std::map<FileId, bool> archived_;  // store completed
  std::vector<Bytes> tape_used_;
  std::vector<TapeRequest> completed_;
  std::uint64_t next_request_id_ = 1;
};

void write_mss_log_header(std::ostream& out);

/// Binds a TapeLibrary to the kernel: wakes at completion times, records
/// written/read bytes in the ledger, and runs per-request callbacks.
class MssService {
public:
  using Callback = std::function<void(const TapeRequest&)>;

  MssService(TapeLibraryConfig config, Catalog& catalog, Kernel& kernel, MetricsLedger& metrics);
  MssService(const MssService&) = delete;
  MssService& operator=(const MssService&) = delete;

  const std::string& id() const noexcept { return library_.config().id; }
  TapeLibrary& library() noexcept { return library_; }
  const TapeLibrary& library() const noexcept { return library_; }

  void store(FileId file, Callback on_done);
  void fetch(FileId file, const std::string& destination, Callback on_done);

  std::uint64_t written_bytes() const noexcept { return written_; }
  std::uint64_t read_bytes() const noexcept { return read_; }

private:
  void pump();

  TapeLibrary library_;
  Kernel& kernel_;
  MetricsLedger& metrics_;
  std::map<std::uint64_t, Callback> callbacks_;
  std::optional<SimTime> wake_at_;
  std::optional<EventHandle> wake_;
  std::uint64_t written_ = 0;
  std::uint64_t read_ = 0;
};

}  // namespace samdh
