#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "probseq/syncsim.hpp"
#include "probseq/timebase.hpp"

namespace probseq {

/// Pr(T_i < T_j | t_i, t_j), always within [0, 1].
class PrecedingProbability {
 public:
  PrecedingProbability() = default;
  explicit PrecedingProbability(double value);
  static PrecedingProbability from_count(std::uint64_t count, std::uint64_t total);

  double value() const { return value_; }

 private:
  double value_ = 0.0;
};

/// Sorted multiset {c_i - c_j} over all sample pairs of clients i and j.
struct DifferenceDistribution {
  ClientId first;
  ClientId second;
  std::vector<std::int64_t> diffs;
  SimTime built_at{};

  /// Number of differences strictly below tau.
  std::uint64_t count_below(std::int64_t tau) const;
};

/// All ordered client pairs, indexed by dense client id.
class DifferenceTable {
 public:
  DifferenceTable() = default;
  DifferenceTable(std::size_t clients, std::vector<DifferenceDistribution> pairs);

  std::size_t clients() const { return clients_; }
  /// Throws std::out_of_range for a pair outside the table.
  const DifferenceDistribution& at(ClientId i, ClientId j) const;
  bool contains(ClientId i, ClientId j) const { return i.value < clients_ && j.value < clients_; }

 private:
  std::size_t clients_ = 0;
  std::vector<DifferenceDistribution> pairs_;  // row-major
};

/// Direct estimator: the fraction of sample pairs with c_x - c_y < y - x,
/// evaluated by nested enumeration.
PrecedingProbability pairwise_probability(LocalTimestamp x, LocalTimestamp y, std::span<const std::int64_t> cx,
                                          std::span<const std::int64_t> cy);
PrecedingProbability pairwise_probability(LocalTimestamp x, LocalTimestamp y, const CorrectionDistribution& cx,
                                          const CorrectionDistribution& cy);

/// Same count as pairwise_probability, in O(m log m) by a merge over sorted
/// copies of the samples; suited to very large distributions.
PrecedingProbability pairwise_probability_merged(LocalTimestamp x, LocalTimestamp y,
                                                 std::span<const std::int64_t> cx,
                                                 std::span<const std::int64_t> cy);

DifferenceDistribution difference_distribution(const CorrectionDistribution& ci, const CorrectionDistribution& cj,
                                               SimTime built_at = {});

/// Every ordered pair of clients, including self-pairs. `dists[k]` must
/// belong to client k.
DifferenceTable precompute_diffs(std::span<const CorrectionDistribution> dists, SimTime built_at = {});

/// Binary-search query against a precomputed pair distribution.
PrecedingProbability pairwise_query(const Event& ei, const Event& ej, const DifferenceDistribution& d);

}  // namespace probseq
