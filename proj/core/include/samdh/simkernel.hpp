#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <queue>
#include <unordered_set>
#include <vector>

#include "samdh/types.hpp"

namespace samdh {

struct EventHandle {
  std::uint64_t sequence = 0;
};

struct RunStats {
  std::uint64_t events_fired = 0;
  SimTime final_time = 0.0;

  friend bool operator==(const RunStats&, const RunStats&) = default;
};

/// Single-threaded discrete-event engine. Events fire in (fire_time,
/// sequence) order; the sequence is the insertion counter, so simultaneous
/// events run FIFO. The clock only moves at event boundaries.
class Kernel {
public:
  using Action = std::function<void()>;

  SimTime now() const noexcept { return now_; }

  /// Enqueue `action` at now() + delay. Throws negative_delay for delay < 0.
  EventHandle schedule(SimTime delay, Action action);
  EventHandle schedule_at(SimTime when, Action action);

  /// Returns false if the event already fired or was cancelled.
  bool cancel(EventHandle handle);

  /// Fire every event with fire_time <= t_end, then park the clock at t_end.
  RunStats run_until(SimTime t_end);
  /// Fire events until the queue is empty.
  RunStats run();

  std::size_t pending() const noexcept { return live_.size(); }
  std::uint64_t total_fired() const noexcept { return total_fired_; }

  /// Optional hook invoked after every fired event (used for sampling
  /// invariants in tests).
  void set_observer(std::function<void()> observer) { observer_ = std::move(observer); }

private:
  struct Entry {
    SimTime time;
    std::uint64_t sequence;
    Action action;
  };
  struct Later {
    bool operator()(const Entry& a, const Entry& b) const noexcept {
      if (a.time != b.time) return a.time > b.time;
      return a.sequence > b.sequence;
    }
  };

  bool fire_next(SimTime limit);

  SimTime now_ = 0.0;
  std::uint64_t next_sequence_ = 0;
  std::uint64_t total_fired_ = 0;
  std::priority_queue<Entry, std::vector<Entry>, Later> queue_;
  std::unordered_set<std::uint64_t> live_;
  std::function<void()> observer_;
};

}  // namespace samdh
