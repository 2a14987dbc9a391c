#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "probseq/baseline.hpp"
#include "probseq/pairwise.hpp"
#include "probseq/sequencer.hpp"
#include "probseq/timebase.hpp"

namespace probseq {

/// A message stream broke its per-client ordering contract.
class ProtocolError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Required probability that a later event is ranked after the frontier.
class StabilityThreshold {
 public:
  StabilityThreshold() = default;
  explicit StabilityThreshold(double p);
  double value() const { return p_; }

 private:
  double p_ = 0.999;
};

/// Per-client stable_until, indexed by client id.
using StableTimes = std::vector<LocalTimestamp>;

/// Smallest t with Pr(t_F + c_x < t + c_c) >= p, read off the sorted
/// difference list as t_F + D[k - 1] + 1 where k is the smallest count with
/// k / |D| >= p.
LocalTimestamp stable_time(const DifferenceDistribution& d, LocalTimestamp frontier_ts, StabilityThreshold p);

StableTimes stable_times(LocalTimestamp frontier_ts, ClientId frontier_client, const DifferenceTable& diffs,
                         StabilityThreshold p);

struct Heartbeat {
  ClientId client;
  LocalTimestamp ts;
};

/// How a buffer is ordered and how far every client must advance before the
/// ordering may be committed.
class OrderingPolicy {
 public:
  virtual ~OrderingPolicy() = default;
  virtual std::size_t clients() const = 0;
  virtual OrderedBatches order(std::span<const Event> events) const = 0;
  virtual StableTimes stable_times(LocalTimestamp frontier_ts, ClientId frontier_client) const = 0;
};

class ProbabilisticPolicy final : public OrderingPolicy {
 public:
  ProbabilisticPolicy(const DifferenceTable& diffs, EdgeThreshold edge, StabilityThreshold stable)
      : diffs_(diffs), edge_(edge), stable_(stable) {}

  std::size_t clients() const override { return diffs_.clients(); }
  OrderedBatches order(std::span<const Event> events) const override;
  StableTimes stable_times(LocalTimestamp frontier_ts, ClientId frontier_client) const override;

 private:
  const DifferenceTable& diffs_;
  EdgeThreshold edge_;
  StabilityThreshold stable_;
};

/// Interval baseline run through the same online protocol: every client is
/// stable at t_F + 2 * bound + 1.
class IntervalPolicy final : public OrderingPolicy {
 public:
  IntervalPolicy(std::size_t clients, ErrorBound bound) : clients_(clients), pooled_(bound) {}
  explicit IntervalPolicy(std::vector<ErrorBound> per_client)
      : clients_(per_client.size()), per_client_(std::move(per_client)) {}

  std::size_t clients() const override { return clients_; }
  OrderedBatches order(std::span<const Event> events) const override;
  StableTimes stable_times(LocalTimestamp frontier_ts, ClientId frontier_client) const override;

 private:
  std::size_t clients_;
  ErrorBound pooled_{};
  std::vector<ErrorBound> per_client_;
};

struct OnlineOptions {
  /// A client unheard for longer than this (sequencer time) is left out of
  /// the stability check. Disabled when unset.
  std::optional<std::int64_t> exclusion_timeout_ns;
};

struct EmittedEvent {
  SimTime emitted_at;
  std::size_t batch_index;
  Event event;
};

/// Buffers events, tracks per-client watermarks, and commits the buffer's
/// ordering only once every live client's watermark has reached its stable
/// time relative to the frontier event. Calls must be externally serialized.
class OnlineSequencer {
 public:
  OnlineSequencer(const OrderingPolicy& policy, OnlineOptions options = {}, SimTime start = {});

  OrderedBatches on_event_arrival(const Event& e, SimTime now = {});
  OrderedBatches on_heartbeat(const Heartbeat& h, SimTime now = {});
  OrderedBatches attempt_order(SimTime now = {});

  /// nullopt is the initial -infinity.
  std::optional<LocalTimestamp> watermark(ClientId c) const;
  std::size_t buffered() const { return buffer_.size(); }
  bool excluded(ClientId c, SimTime now) const;
  /// Stable times from the most recent ordering of a non-empty buffer.
  const StableTimes& last_stable_times() const { return cache_.stable; }
  const std::vector<EmittedEvent>& emission_log() const { return log_; }
  std::size_t emitted_batches() const { return next_batch_index_; }
  std::size_t orderings_computed() const { return orderings_; }

 private:
  void check_client(ClientId c) const;
  void refresh_cache();

  const OrderingPolicy& policy_;
  OnlineOptions options_;
  std::vector<Event> buffer_;
  std::vector<std::optional<LocalTimestamp>> watermark_;
  std::vector<std::optional<std::uint64_t>> last_seq_;
  std::vector<SimTime> last_heard_;

  struct Cache {
    bool valid = false;
    OrderedBatches batches;
    StableTimes stable;
  } cache_;

  std::vector<EmittedEvent> log_;
  std::size_t next_batch_index_ = 0;
  std::size_t orderings_ = 0;
};

/// CSV `emit_sim_time_ns,batch_index,client_id,seq,local_ts_ns`.
void write_emission_log_csv(std::ostream& out, std::span<const EmittedEvent> log);

}  // namespace probseq
