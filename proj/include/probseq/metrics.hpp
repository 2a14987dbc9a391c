#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "probseq/sequencer.hpp"
#include "probseq/timebase.hpp"

namespace probseq {

/// Events in their true generation order.
struct GroundTruth {
  std::vector<EventKey> order;
};

/// Rank Agreement Score: +1 per correctly ordered pair, -1 per inverted
/// pair, 0 per pair left in the same batch, over n(n-1)/2 pairs.
struct RasScore {
  double value = 0.0;
  std::uint64_t correct = 0;
  std::uint64_t incorrect = 0;
  std::uint64_t unordered = 0;
};

/// Throws std::invalid_argument unless `batches` partitions exactly the
/// events named by `truth`.
RasScore ras(const OrderedBatches& batches, const GroundTruth& truth);

/// Mean RAS over consecutive, non-overlapping windows of `window` events of
/// the true order; a trailing partial window is dropped.
double windowed_ras(const OrderedBatches& batches, const GroundTruth& truth, std::size_t window);

struct RankStats {
  std::vector<double> avg_rank;  // per client
  double variance = 0.0;         // population variance of avg_rank
};

/// `ranks[t][c]` is client c's rank (1-based) in trial t; each row must be a
/// permutation of 1..K.
RankStats rank_stats(std::span<const std::vector<int>> ranks);

/// Worst-case relative drift between two clocks over one probe interval:
/// 2 * rho * W.
double drift_bound(double rho_ppm, double window_ns);
/// Lower bound on achievable offset error among n clocks: U * (1 - 1/n).
double offset_bound(double uncertainty_ns, int n);

}  // namespace probseq
