#include "samdh/simkernel.hpp"

#include <string>

#include "samdh/error.hpp"

namespace samdh {

EventHandle Kernel::schedule(SimTime delay, Action action) {
  if (!(delay >= 0.0)) {
    throw Error(ErrorCode::negative_delay, "delay " + std::to_string(delay) + " < 0");
  }
  return schedule_at(now_ + delay, std::move(action));
}

EventHandle Kernel::schedule_at(SimTime when, Action action) {
  if (!(when >= now_)) {
    throw Error(ErrorCode::negative_delay,
                "fire time " + std::to_string(when) + " is before now " + std::to_string(now_));
  }
  const std::uint64_t seq = next_sequence_++;
  queue_.push(Entry{when, seq, std::move(action)});
  live_.insert(seq);
  return EventHandle{seq};
}

bool Kernel::cancel(EventHandle handle) { return live_.erase(handle.sequence) > 0; }

bool Kernel::fire_next(SimTime limit) {
  while (!queue_.empty()) {
    if (queue_.top().time > limit) return false;
    // priority_queue::top is const; the entry is discarded right after.
    Entry entry = std::move(const_cast<Entry&>(queue_.top()));
    queue_.pop();
    if (live_.erase(entry.sequence) == 0) continue;  // cancelled
    now_ = entry.time;
    ++total_fired_;
    entry.action();
    if (observer_) observer_();
    return true;
  }
  return false;
}

RunStats Kernel::run_until(SimTime t_end) {
  if (!(t_end >= now_)) {
    throw Error(ErrorCode::invalid_argument, "run_until target precedes the current time");
  }
  RunStats stats;
  while (fire_next(t_end)) ++stats.events_fired;
  now_ = t_end;
  stats.final_time = now_;
  return stats;
}

RunStats Kernel::run() {
  RunStats stats;
  while (fire_next(std::numeric_limits<SimTime>::infinity())) ++stats.events_fired;
  stats.final_time = now_;
  return stats;
}

}  // namespace samdh
