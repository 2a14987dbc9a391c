#include "probseq/online.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <string>

namespace probseq {

StabilityThreshold::StabilityThreshold(double p) : p_(p) {
  if (!(p > 0.5 && p <= 1.0)) throw std::invalid_argument("stability threshold must lie in (0.5, 1]");
}

LocalTimestamp stable_time(const DifferenceDistribution& d, LocalTimestamp frontier_ts, StabilityThreshold p) {
  const std::size_t n = d.diffs.size();
  if (n == 0) throw std::invalid_argument("stable_time: empty difference distribution");
  const double total = static_cast<double>(n);
  // Smallest k with k / n >= p under the same double division queries use.
  auto k = static_cast<std::size_t>(std::ceil(p.value() * total));
  k = std::clamp<std::size_t>(k, 1, n);
  while (k > 1 && static_cast<double>(k - 1) / total >= p.value()) --k;
  while (k < n && static_cast<double>(k) / total < p.value()) ++k;
  return LocalTimestamp{ticks::add(ticks::add(frontier_ts.ticks, d.diffs[k - 1]), 1)};
}

StableTimes stable_times(LocalTimestamp frontier_ts, ClientId frontier_client, const DifferenceTable& diffs,
                         StabilityThreshold p) {
  StableTimes out;
  out.reserve(diffs.clients());
  for (std::uint32_t c = 0; c < diffs.clients(); ++c) {
    out.push_back(stable_time(diffs.at(frontier_client, ClientId{c}), frontier_ts, p));
  }
  return out;
}

OrderedBatches ProbabilisticPolicy::order(std::span<const Event> events) const {
  return order_events(events, diffs_, edge_);
}

StableTimes ProbabilisticPolicy::stable_times(LocalTimestamp frontier_ts, ClientId frontier_client) const {
  return probseq::stable_times(frontier_ts, frontier_client, diffs_, stable_);
}

OrderedBatches IntervalPolicy::order(std::span<const Event> events) const {
  if (per_client_.empty()) return baseline_order(events, pooled_);
  return baseline_order(events, std::span<const ErrorBound>(per_client_));
}

StableTimes IntervalPolicy::stable_times(LocalTimestamp frontier_ts, ClientId frontier_client) const {
  StableTimes out(clients_);
  for (std::size_t c = 0; c < clients_; ++c) {
    // With per-client bounds the frontier interval's upper end and the
    // candidate's lower end each use their own client's bound.
    const std::int64_t width = per_client_.empty()
                                   ? ticks::mul(2, pooled_.bound_ns)
                                   : ticks::add(per_client_.at(frontier_client.value).bound_ns,
                                                per_client_[c].bound_ns);
    out[c] = LocalTimestamp{ticks::add(ticks::add(frontier_ts.ticks, width), 1)};
  }
  return out;
}

OnlineSequencer::OnlineSequencer(const OrderingPolicy& policy, OnlineOptions options, SimTime start)
    : policy_(policy),
      options_(options),
      watermark_(policy.clients()),
      last_seq_(policy.clients()),
      last_heard_(policy.clients(), start) {
  if (options_.exclusion_timeout_ns && *options_.exclusion_timeout_ns <= 0) {
    throw std::invalid_argument("exclusion timeout must be positive");
  }
}

void OnlineSequencer::check_client(ClientId c) const {
  if (c.value >= watermark_.size()) throw ProtocolError("unknown client " + to_string(c));
}

std::optional<LocalTimestamp> OnlineSequencer::watermark(ClientId c) const {
  check_client(c);
  return watermark_[c.value];
}

bool OnlineSequencer::excluded(ClientId c, SimTime now) const {
  check_client(c);
  if (!options_.exclusion_timeout_ns) return false;
  return now.ticks - last_heard_[c.value].ticks > *options_.exclusion_timeout_ns;
}

OrderedBatches OnlineSequencer::on_event_arrival(const Event& e, SimTime now) {
  check_client(e.client);
  const auto c = e.client.value;
  if (last_seq_[c]) {
    if (e.seq == *last_seq_[c]) {
      throw ProtocolError("duplicate event (" + to_string(e.client) + "," + std::to_string(e.seq) + ")");
    }
    if (e.seq < *last_seq_[c]) {
      throw ProtocolError("event from client " + to_string(e.client) + " arrived out of order");
    }
  }
  if (watermark_[c] && e.ts < *watermark_[c]) {
    throw ProtocolError("event from client " + to_string(e.client) + " is below its watermark");
  }
  last_seq_[c] = e.seq;
  // In-order delivery means nothing older than this event can still arrive.
  watermark_[c] = e.ts;
  last_heard_[c] = std::max(last_heard_[c], now);
  buffer_.push_back(e);
  cache_.valid = false;
  return attempt_order(now);
}

OrderedBatches OnlineSequencer::on_heartbeat(const Heartbeat& h, SimTime now) {
  check_client(h.client);
  auto& w = watermark_[h.client.value];
  if (!w || h.ts > *w) w = h.ts;
  last_heard_[h.client.value] = std::max(last_heard_[h.client.value], now);
  return attempt_order(now);
}

void OnlineSequencer::refresh_cache() {
  if (cache_.valid) return;
  cache_.batches = policy_.order(buffer_);
  ++orderings_;
  const auto& last = cache_.batches.batches.back();
  const Event& frontier = *std::max_element(last.begin(), last.end(), timestamp_order);
  cache_.stable = policy_.stable_times(frontier.ts, frontier.client);
  cache_.valid = true;
}

OrderedBatches OnlineSequencer::attempt_order(SimTime now) {
  if (buffer_.empty()) return {};
  refresh_cache();
  for (std::uint32_t c = 0; c < watermark_.size(); ++c) {
    if (excluded(ClientId{c}, now)) continue;
    if (!watermark_[c] || *watermark_[c] < cache_.stable[c]) return {};
  }

  OrderedBatches out = std::move(cache_.batches);
  for (const auto& batch : out.batches) {
    for (const auto& e : batch) log_.push_back({now, next_batch_index_, e});
    ++next_batch_index_;
  }
  buffer_.clear();
  cache_.batches = {};
  cache_.valid = false;
  return out;
}

void write_emission_log_csv(std::ostream& out, std::span<const EmittedEvent> log) {
  out << "emit_sim_time_ns,batch_index,client_id,seq,local_ts_ns\n";
  for (const auto& r : log) {
    out << r.emitted_at.ticks << ',' << r.batch_index << ',' << r.event.client.value << ',' << r.event.seq << ','
        << r.event.ts.ticks << '\n';
  }
}

}  // namespace probseq
