#include "probseq/baseline.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace probseq {

namespace {

OrderedBatches group_intervals(std::vector<UncertaintyInterval> intervals) {
  std::sort(intervals.begin(), intervals.end(), [](const auto& a, const auto& b) {
    if (a.lo != b.lo) return a.lo < b.lo;
    if (a.hi != b.hi) return a.hi < b.hi;
    return timestamp_order(a.event, b.event);
  });
  OrderedBatches out;
  LocalTimestamp reach{};
  for (const auto& iv : intervals) {
    if (out.batches.empty() || iv.lo > reach) {
      out.batches.emplace_back();
      reach = iv.hi;
    } else {
      reach = std::max(reach, iv.hi);
    }
    out.batches.back().push_back(iv.event);
  }
  for (auto& b : out.batches) std::sort(b.begin(), b.end(), timestamp_order);
  return out;
}

}  // namespace

ErrorBound compute_bound(std::span<const std::int64_t> samples) {
  if (samples.size() < 2) throw std::invalid_argument("compute_bound: need at least two samples");
  // Two passes around the mean; samples can be far from zero.
  long double mean = 0.0L;
  for (auto s : samples) mean += static_cast<long double>(s);
  mean /= static_cast<long double>(samples.size());
  long double acc = 0.0L;
  for (auto s : samples) {
    const long double d = static_cast<long double>(s) - mean;
    acc += d * d;
  }
  const double sigma = static_cast<double>(std::sqrt(acc / static_cast<long double>(samples.size())));
  return ErrorBound{ticks::round_nearest(3.0 * sigma), sigma};
}

ErrorBound compute_bound(std::span<const CorrectionDistribution> dists) {
  std::vector<std::int64_t> pooled;
  for (const auto& d : dists) {
    const auto s = d.samples();
    pooled.insert(pooled.end(), s.begin(), s.end());
  }
  return compute_bound(pooled);
}

std::vector<ErrorBound> compute_bounds_per_client(std::span<const CorrectionDistribution> dists) {
  std::vector<ErrorBound> out;
  out.reserve(dists.size());
  for (const auto& d : dists) {
    const auto s = d.samples();
    out.push_back(compute_bound(s));
  }
  return out;
}

UncertaintyInterval make_interval(const Event& e, const ErrorBound& bound) {
  if (bound.bound_ns < 0) throw std::invalid_argument("error bound must be non-negative");
  return {e, LocalTimestamp{ticks::sub(e.ts.ticks, bound.bound_ns)},
          LocalTimestamp{ticks::add(e.ts.ticks, bound.bound_ns)}};
}

OrderedBatches baseline_order(std::span<const Event> events, const ErrorBound& bound) {
  std::vector<UncertaintyInterval> intervals;
  intervals.reserve(events.size());
  for (const auto& e : events) intervals.push_back(make_interval(e, bound));
  return group_intervals(std::move(intervals));
}

OrderedBatches baseline_order(std::span<const Event> events, std::span<const ErrorBound> bounds) {
  std::vector<UncertaintyInterval> intervals;
  intervals.reserve(events.size());
  for (const auto& e : events) {
    if (e.client.value >= bounds.size()) throw std::out_of_range("baseline_order: no bound for client");
    intervals.push_back(make_interval(e, bounds[e.client.value]));
  }
  return group_intervals(std::move(intervals));
}

}  // namespace probseq
