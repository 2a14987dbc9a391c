#include "probseq/metrics.hpp"

#include <algorithm>
#include <map>
#include <stdexcept>
#include <string>

namespace probseq {

namespace {

// Batch index for each event, aligned with truth positions.
std::vector<std::size_t> batch_positions(const OrderedBatches& batches, const GroundTruth& truth) {
  std::map<EventKey, std::size_t> position;
  for (std::size_t i = 0; i < truth.order.size(); ++i) {
    if (!position.emplace(truth.order[i], i).second) {
      throw std::invalid_argument("ground truth lists an event twice");
    }
  }
  constexpr auto kUnset = static_cast<std::size_t>(-1);
  std::vector<std::size_t> batch_of(truth.order.size(), kUnset);
  for (std::size_t b = 0; b < batches.batches.size(); ++b) {
    for (const auto& e : batches.batches[b]) {
      const auto it = position.find(e.key());
      if (it == position.end()) {
        throw std::invalid_argument("batched event (" + to_string(e.client) + "," + std::to_string(e.seq) +
                                    ") is not in the ground truth");
      }
      if (batch_of[it->second] != kUnset) throw std::invalid_argument("event appears in more than one batch");
      batch_of[it->second] = b;
    }
  }
  if (std::find(batch_of.begin(), batch_of.end(), kUnset) != batch_of.end()) {
    throw std::invalid_argument("ground-truth event missing from batches");
  }
  return batch_of;
}

RasScore score_range(std::span<const std::size_t> batch_of) {
  RasScore s;
  const std::size_t n = batch_of.size();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (batch_of[i] == batch_of[j]) ++s.unordered;
      else if (batch_of[i] < batch_of[j]) ++s.correct;
      else ++s.incorrect;
    }
  }
  const double pairs = static_cast<double>(n) * static_cast<double>(n - 1) / 2.0;
  s.value = pairs > 0 ? (static_cast<double>(s.correct) - static_cast<double>(s.incorrect)) / pairs : 0.0;
  return s;
}

}  // namespace

RasScore ras(const OrderedBatches& batches, const GroundTruth& truth) {
  const auto batch_of = batch_positions(batches, truth);
  return score_range(batch_of);
}

double windowed_ras(const OrderedBatches& batches, const GroundTruth& truth, std::size_t window) {
  if (window < 2) throw std::invalid_argument("windowed_ras: window must be at least 2");
  const auto batch_of = batch_positions(batches, truth);
  const std::size_t windows = batch_of.size() / window;
  if (windows == 0) throw std::invalid_argument("windowed_ras: fewer events than one window");
  double total = 0.0;
  for (std::size_t w = 0; w < windows; ++w) {
    total += score_range(std::span<const std::size_t>(batch_of).subspan(w * window, window)).value;
  }
  return total / static_cast<double>(windows);
}

RankStats rank_stats(std::span<const std::vector<int>> ranks) {
  if (ranks.empty()) throw std::invalid_argument("rank_stats: no trials");
  const std::size_t k = ranks.front().size();
  if (k == 0) throw std::invalid_argument("rank_stats: no clients");
  RankStats out;
  out.avg_rank.assign(k, 0.0);
  std::vector<char> seen(k);
  for (const auto& row : ranks) {
    if (row.size() != k) throw std::invalid_argument("rank_stats: ragged rank matrix");
    std::fill(seen.begin(), seen.end(), 0);
    for (std::size_t c = 0; c < k; ++c) {
      const int r = row[c];
      if (r < 1 || static_cast<std::size_t>(r) > k || seen[r - 1]) {
        throw std::invalid_argument("rank_stats: trial ranks are not a permutation of 1..K");
      }
      seen[r - 1] = 1;
      out.avg_rank[c] += r;
    }
  }
  double mean = 0.0;
  for (auto& a : out.avg_rank) {
    a /= static_cast<double>(ranks.size());
    mean += a;
  }
  mean /= static_cast<double>(k);
  for (double a : out.avg_rank) out.variance += (a - mean) * (a - mean);
  out.variance /= static_cast<double>(k);
  return out;
}

double drift_bound(double rho_ppm, double window_ns) {
  if (rho_ppm < 0 || window_ns < 0) throw std::invalid_argument("drift_bound: negative input");
  return 2.0 * rho_ppm * window_ns / 1e6;
}

double offset_bound(double uncertainty_ns, int n) {
  if (n < 2) throw std::invalid_argument("offset_bound: need at least two clocks");
  if (uncertainty_ns < 0) throw std::invalid_argument("offset_bound: negative uncertainty");
  return uncertainty_ns * static_cast<double>(n - 1) / static_cast<double>(n);
}

}  // namespace probseq
