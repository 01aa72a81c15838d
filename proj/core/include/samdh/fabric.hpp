#pragma once

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "samdh/rng.hpp"
#include "samdh/simkernel.hpp"
#include "samdh/types.hpp"

namespace samdh {

class StationCache;

struct LinkSpec {
  double bandwidth = 0.0;  // bytes per second, > 0
  double latency = 0.0;    // seconds, >= 0
};

/// Per-attempt corruption probabilities; the last value repeats.
struct FaultProfile {
  std::vector<double> per_attempt;

  double probability(std::uint32_t attempt_index) const noexcept {
    if (per_attempt.empty()) return 0.0;
    return per_attempt[std::min<std::size_t>(attempt_index, per_attempt.size() - 1)];
  }
  static FaultProfile none() { return {}; }
  static FaultProfile uniform(double p) { return FaultProfile{{p}}; }
};

enum class Verdict { ok, corrupted, retried };

std::string_view to_string(Verdict verdict) noexcept;

struct TransferRequest {
  FileId file;
  Bytes size = 0;
  std::uint32_t crc = 0;  // catalog checksum the destination must reproduce
  std::string src;
  std::string dst;
};

/// One logical move across one link, including any retransfers.
/// verdict == ok or retried iff crc_at_dst == crc_at_src.
struct TransferEvent {
  FileId file;
  Bytes size = 0;
  std::string src;
  std::string dst;
  SimTime start = 0.0;
  SimTime end = 0.0;
  std::uint32_t crc_at_src = 0;
  std::uint32_t crc_at_dst = 0;
  Verdict verdict = Verdict::ok;
  std::uint32_t attempts = 0;

  bool delivered() const noexcept { return verdict != Verdict::corrupted; }
};

struct StreamResult {
  FileId file;
  std::string server;
  std::string reader;
  SimTime opened = 0.0;
  SimTime closed = 0.0;
  Bytes bytes = 0;
};

/// Transfer engine on top of the simulation kernel.
///
/// Links are undirected and processor-shared: the n flows active on a link
/// each get bandwidth / n, recomputed whenever a flow starts or ends. A
/// transfer attempt waits the link latency, then moves its bytes as one
/// flow. The destination checksum is recomputed after every attempt; a
/// mismatch triggers a retransfer until the retry budget is spent.
class Fabric {
public:
  using TransferCallback = std::function<void(const TransferEvent&)>;
  using StreamCallback = std::function<void(const StreamResult&)>;
  using DomainResolver = std::function<std::optional<std::string>(std::string_view)>;

  Fabric(Kernel& kernel, std::uint64_t seed);
  Fabric(const Fabric&) = delete;
  Fabric& operator=(const Fabric&) = delete;

  /// Link lookup order: explicit node pair, domain pair, default.
  void add_link(const std::string& a, const std::string& b, LinkSpec spec);
  void add_domain_link(const std::string& domain_a, const std::string& domain_b, LinkSpec spec);
  void set_default_link(LinkSpec spec);
  void set_domain_resolver(DomainResolver resolver) { domain_of_ = std::move(resolver); }
  bool has_link(std::string_view a, std::string_view b) const;
  /// Throws no_link.
  LinkSpec link_spec(std::string_view a, std::string_view b) const;

  /// Retransfers allowed after a checksum mismatch (default 2).
  void set_retry_budget(std::uint32_t retries) noexcept { retry_budget_ = retries; }
  std::uint32_t retry_budget() const noexcept { return retry_budget_; }

  /// Starts a move; `on_done` fires once with the final event. Throws
  /// no_link before anything is scheduled. An exhausted retry budget is
  /// reported as verdict corrupted, which callers surface as stage_failed.
  void transfer(TransferRequest request, FaultProfile faults, TransferCallback on_done);

  /// Held channel for network-attached reads: takes a fair share of the
  /// server-reader link for `hold` seconds and pins the file in
  /// `server_cache` until it closes. Bytes read are the integral of the
  /// allocated rate, capped at `size`. hold == 0 is a no-op channel.
  /// Throws not_cached, no_link.
  void open_stream(StationCache& server_cache, FileId file, Bytes size, const std::string& server,
                   const std::string& reader, SimTime hold, StreamCallback on_close);
  /// Same channel without a cache to pin (e.g. reading from a mass storage
  /// node).
  void open_channel(const std::string& server, const std::string& reader, FileId file, Bytes size,
                    SimTime hold, StreamCallback on_close);

  /// Moves `size` bytes across the link with no latency, checksum, or log
  /// entry. Used for intra-station reads.
  void start_flow(const std::string& a, const std::string& b, Bytes size, std::function<void()> on_done);

  std::size_t active_flows(std::string_view a, std::string_view b) const;
  /// Per-flow allocated rate on the link right now (0 when idle).
  double flow_rate(std::string_view a, std::string_view b) const;

  const std::vector<TransferEvent>& log() const noexcept { return log_; }
  std::uint64_t corrupted_attempts() const noexcept { return corrupted_attempts_; }
  std::uint64_t attempts_started() const noexcept { return attempts_started_; }

  /// CSV `t_start,t_end,file_id,size,src,dst,verdict,attempts`.
  void write_log(std::ostream& out) const;

private:
  using LinkKey = std::pair<std::string, std::string>;

  struct Flow {
    double remaining = 0.0;  // +inf for held channels
    double initial = 0.0;
    double moved = 0.0;
    std::function<void(double moved)> on_done;
  };

  struct LinkState {
    LinkSpec spec;
    std::map<std::uint64_t, Flow> flows;
    SimTime last_update = 0.0;
    std::optional<EventHandle> wake;
  };

  struct TransferState;

  static LinkKey key_of(std::string_view a, std::string_view b);
  LinkState& link_state(std::string_view a, std::string_view b);
  void advance(LinkState& link);
  void reschedule(const LinkKey& key, LinkState& link);
  void on_wake(const LinkKey& key);
  std::uint64_t add_flow(const std::string& a, const std::string& b, double bytes,
                         std::function<void(double)> on_done);
  double remove_flow(const std::string& a, const std::string& b, std::uint64_t id);
  void begin_attempt(std::shared_ptr<TransferState> state);
  void finish_attempt(std::shared_ptr<TransferState> state);

  Kernel& kernel_;
  SplitMix64 rng_;
  std::uint32_t retry_budget_ = 2;
  std::map<LinkKey, LinkSpec> explicit_links_;
  std::map<LinkKey, LinkSpec> domain_links_;
  std::optional<LinkSpec> default_link_;
  DomainResolver domain_of_;
  std::map<LinkKey, LinkState> links_;
  std::uint64_t next_flow_id_ = 1;
  std::vector<TransferEvent> log_;
  std::uint64_t corrupted_attempts_ = 0;
  std::uint64_t attempts_started_ = 0;
};

void write_transfer_log_header(std::ostream& out);

}  // namespace samdh
