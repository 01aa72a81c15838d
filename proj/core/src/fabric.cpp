#include "samdh/fabric.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "samdh/cache.hpp"
#include "samdh/crc32.hpp"
#include "samdh/error.hpp"
#include "text.hpp"

namespace samdh {

std::string_view to_string(Verdict verdict) noexcept {
  switch (verdict) {
    case Verdict::ok: return "ok";
    case Verdict::corrupted: return "corrupted";
    case Verdict::retried: return "retried";
  }
  return "?";
}

struct Fabric::TransferState {
  TransferRequest request;
  FaultProfile faults;
  TransferCallback on_done;
  LinkSpec spec;
  SimTime start = 0.0;
  std::uint32_t attempts = 0;
  bool saw_corruption = false;
};

namespace {

void check_spec(const LinkSpec& spec) {
  if (!(spec.bandwidth > 0.0)) throw Error(ErrorCode::invalid_argument, "link bandwidth must be > 0");
  if (!(spec.latency >= 0.0)) throw Error(ErrorCode::invalid_argument, "link latency must be >= 0");
}

}  // namespace

Fabric::Fabric(Kernel& kernel, std::uint64_t seed) : kernel_(kernel), rng_(seed) {}

Fabric::LinkKey Fabric::key_of(std::string_view a, std::string_view b) {
  if (b < a) std::swap(a, b);
  return {std::string(a), std::string(b)};
}

void Fabric::add_link(const std::string& a, const std::string& b, LinkSpec spec) {
  check_spec(spec);
  explicit_links_[key_of(a, b)] = spec;
}

void Fabric::add_domain_link(const std::string& domain_a, const std::string& domain_b, LinkSpec spec) {
  check_spec(spec);
  domain_links_[key_of(domain_a, domain_b)] = spec;
}

void Fabric::set_default_link(LinkSpec spec) {
  check_spec(spec);
  default_link_ = spec;
}

bool Fabric::has_link(std::string_view a, std::string_view b) const {
  try {
    link_spec(a, b);
    return true;
  } catch (const Error&) {
    return false;
  }
}

LinkSpec Fabric::link_spec(std::string_view a, std::string_view b) const {
  if (auto it = explicit_links_.find(key_of(a, b)); it != explicit_links_.end()) return it->second;
  if (domain_of_) {
    auto da = domain_of_(a);
    auto db = domain_of_(b);
    if (da && db) {
      if (auto it = domain_links_.find(key_of(*da, *db)); it != domain_links_.end()) return it->second;
    }
  }
  if (default_link_) return *default_link_;
  throw Error(ErrorCode::no_link, "no link between '" + std::string(a) + "' and '" + std::string(b) + "'");
}

Fabric::LinkState& Fabric::link_state(std::string_view a, std::string_view b) {
  const LinkKey key = key_of(a, b);
  auto it = links_.find(key);
  if (it == links_.end()) {
    it = links_.emplace(key, LinkState{link_spec(a, b), {}, kernel_.now(), std::nullopt}).first;
  }
  return it->second;
}

void Fabric::advance(LinkState& link) {
  const SimTime now = kernel_.now();
  const double dt = now - link.last_update;
  link.last_update = now;
  if (link.flows.empty() || dt <= 0.0) return;
  const double rate = link.spec.bandwidth / static_cast<double>(link.flows.size());
  for (auto& [id, flow] : link.flows) {
    const double moved = rate * dt;
    flow.moved += moved;
    if (std::isfinite(flow.remaining)) flow.remaining -= moved;
  }
}

void Fabric::reschedule(const LinkKey& key, LinkState& link) {
  if (link.wake) {
    kernel_.cancel(*link.wake);
    link.wake.reset();
  }
  double soonest = std::numeric_limits<double>::infinity();
  for (const auto& [id, flow] : link.flows) soonest = std::min(soonest, flow.remaining);
  if (!std::isfinite(soonest)) return;
  const double rate = link.spec.bandwidth / static_cast<double>(link.flows.size());
  link.wake = kernel_.schedule(std::max(0.0, soonest) / rate, [this, key] { on_wake(key); });
}

void Fabric::on_wake(const LinkKey& key) {
  LinkState& link = links_.at(key);
  link.wake.reset();
  advance(link);
  std::vector<std::pair<double, std::function<void(double)>>> finished;
  for (auto it = link.flows.begin(); it != link.flows.end();) {
    const Flow& f = it->second;
    if (std::isfinite(f.initial) && f.remaining <= std::max(1e-3, 1e-9 * f.initial)) {
      finished.emplace_back(std::min(f.moved, f.initial), std::move(it->second.on_done));
      it = link.flows.erase(it);
    } else {
      ++it;
    }
  }
  reschedule(key, link);
  for (auto& [moved, done] : finished) done(moved);
}

std::uint64_t Fabric::add_flow(const std::string& a, const std::string& b, double bytes,
                               std::function<void(double)> on_done) {
  LinkState& link = link_state(a, b);
  advance(link);
  const std::uint64_t id = next_flow_id_++;
  link.flows.emplace(id, Flow{bytes, bytes, 0.0, std::move(on_done)});
  reschedule(key_of(a, b), link);
  return id;
}

double Fabric::remove_flow(const std::string& a, const std::string& b, std::uint64_t id) {
  LinkState& link = link_state(a, b);
  advance(link);
  auto it = link.flows.find(id);
  const double moved = it == link.flows.end() ? 0.0 : it->second.moved;
  if (it != link.flows.end()) link.flows.erase(it);
  reschedule(key_of(a, b), link);
  return moved;
}

void Fabric::start_flow(const std::string& a, const std::string& b, Bytes size, std::function<void()> on_done) {
  if (size == 0) {
    link_spec(a, b);
    kernel_.schedule(0.0, std::move(on_done));
    return;
  }
  add_flow(a, b, static_cast<double>(size), [done = std::move(on_done)](double) { done(); });
}

void Fabric::transfer(TransferRequest request, FaultProfile faults, TransferCallback on_done) {
  const LinkSpec spec = link_spec(request.src, request.dst);
  auto state = std::make_shared<TransferState>();
  state->request = std::move(request);
  state->faults = std::move(faults);
  state->on_done = std::move(on_done);
  state->spec = spec;
  state->start = kernel_.now();
  begin_attempt(std::move(state));
}

void Fabric::begin_attempt(std::shared_ptr<TransferState> state) {
  ++state->attempts;
  ++attempts_started_;
  kernel_.schedule(state->spec.latency, [this, state] {
    start_flow(state->request.src, state->request.dst, state->request.size,
               [this, state] { finish_attempt(state); });
  });
}

void Fabric::finish_attempt(std::shared_ptr<TransferState> state) {
  const TransferRequest& req = state->request;
  std::uint32_t crc_at_dst = req.crc;
  const double p = state->faults.probability(state->attempts - 1);
  if (p > 0.0 && req.size > 0 && rng_.uniform() < p) {
    const std::uint64_t bit = rng_.below(req.size * 8);
    crc_at_dst ^= crc32_bitflip_delta(req.size, bit);
  }

  const bool intact = crc_at_dst == req.crc;
  if (!intact) {
    ++corrupted_attempts_;
    state->saw_corruption = true;
    if (state->attempts <= retry_budget_) {
      begin_attempt(std::move(state));
      return;
    }
  }

  TransferEvent event{req.file,   req.size,     req.src, req.dst, state->start, kernel_.now(),
                      req.crc,    crc_at_dst,   Verdict::ok, state->attempts};
  if (!intact) {
    event.verdict = Verdict::corrupted;
  } else if (state->saw_corruption) {
    event.verdict = Verdict::retried;
  }
  log_.push_back(event);
  state->on_done(event);
}

void Fabric::open_channel(const std::string& server, const std::string& reader, FileId file, Bytes size,
                          SimTime hold, StreamCallback on_close) {
  if (!(hold >= 0.0)) throw Error(ErrorCode::invalid_argument, "stream hold must be >= 0");
  link_spec(server, reader);
  const SimTime opened = kernel_.now();
  if (hold == 0.0) {
    kernel_.schedule(0.0, [=, cb = std::move(on_close)] { cb(StreamResult{file, server, reader, opened, opened, 0}); });
    return;
  }
  const std::uint64_t id = add_flow(server, reader, std::numeric_limits<double>::infinity(), [](double) {});
  kernel_.schedule(hold, [this, id, file, size, server, reader, opened, cb = std::move(on_close)] {
    const double moved = remove_flow(server, reader, id);
    const auto bytes = static_cast<Bytes>(std::min(std::floor(moved + 1e-6), static_cast<double>(size)));
    cb(StreamResult{file, server, reader, opened, kernel_.now(), bytes});
  });
}

void Fabric::open_stream(StationCache& server_cache, FileId file, Bytes size, const std::string& server,
                         const std::string& reader, SimTime hold, StreamCallback on_close) {
  if (!server_cache.contains(file)) {
    throw Error(ErrorCode::not_cached, "file " + to_string(file) + " not cached at '" + server + "'");
  }
  link_spec(server, reader);
  if (hold == 0.0) {
    open_channel(server, reader, file, size, hold, std::move(on_close));
    return;
  }
  server_cache.set_pin(file, +1);
  open_channel(server, reader, file, size, hold,
               [&server_cache, file, cb = std::move(on_close)](const StreamResult& result) {
                 server_cache.set_pin(file, -1);
                 cb(result);
               });
}

std::size_t Fabric::active_flows(std::string_view a, std::string_view b) const {
  auto it = links_.find(key_of(a, b));
  return it == links_.end() ? 0 : it->second.flows.size();
}

double Fabric::flow_rate(std::string_view a, std::string_view b) const {
  auto it = links_.find(key_of(a, b));
  if (it == links_.end() || it->second.flows.empty()) return 0.0;
  return it->second.spec.bandwidth / static_cast<double>(it->second.flows.size());
}

void write_transfer_log_header(std::ostream& out) {
  out << "t_start,t_end,file_id,size,src,dst,verdict,attempts\n";
}

void Fabric::write_log(std::ostream& out) const {
  write_transfer_log_header(out);
  for (const auto& e : log_) {
    out << detail::fixed(e.start, 6) << ',' << detail::fixed(e.end, 6) << ',' << e.file.value << ',' << e.size
        << ',' << e.src << ',' << e.dst << ',' << to_string(e.verdict) << ',' << e.attempts << '\n';
  }
}

}  // namespace samdh
