#pragma once

// Uncertainty-interval ordering: each timestamp t becomes [t - b, t + b] and
// events whose intervals (transitively) overlap share a batch.

#include <cstdint>
#include <span>
#include <vector>

#include "probseq/sequencer.hpp"
#include "probseq/syncsim.hpp"
#include "probseq/timebase.hpp"

namespace probseq {

struct ErrorBound {
  std::int64_t bound_ns = 0;
  double sigma_ns = 0.0;
};

struct UncertaintyInterval {
  Event event;
  LocalTimestamp lo;
  LocalTimestamp hi;
};

/// Three population standard deviations of the pooled samples.
ErrorBound compute_bound(std::span<const std::int64_t> samples);
ErrorBound compute_bound(std::span<const CorrectionDistribution> dists);
/// One bound per client, from that client's samples alone.
std::vector<ErrorBound> compute_bounds_per_client(std::span<const CorrectionDistribution> dists);

UncertaintyInterval make_interval(const Event& e, const ErrorBound& bound);

/// Groups are connected components of the interval-overlap graph (touching
/// endpoints overlap), emitted by smallest interval start.
OrderedBatches baseline_order(std::span<const Event> events, const ErrorBound& bound);
/// Per-client bounds, indexed by client id.
OrderedBatches baseline_order(std::span<const Event> events, std::span<const ErrorBound> bounds);

}  // namespace probseq
