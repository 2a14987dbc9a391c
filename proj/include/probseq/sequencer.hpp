#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "probseq/pairwise.hpp"
#include "probseq/timebase.hpp"

namespace probseq {

/// Dense n x n matrix of preceding-probabilities; P(i, j) is the
/// probability that event i truly happened before event j. The diagonal is 0.
class ProbMatrix {
 public:
  explicit ProbMatrix(std::size_t n = 0) : n_(n), data_(n * n, 0.0) {}

  std::size_t size() const { return n_; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * n_ + j]; }
  double& operator()(std::size_t i, std::size_t j) { return data_[i * n_ + j]; }

 private:
  std::size_t n_;
  std::vector<double> data_;
};

/// Minimum preceding-probability for an edge; the edge rule is strict (>).
class EdgeThreshold {
 public:
  EdgeThreshold() = default;
  explicit EdgeThreshold(double value);
  double value() const { return value_; }

 private:
  double value_ = 0.5;
};

/// Sequence of disjoint event sets in emission order.
struct OrderedBatches {
  std::vector<std::vector<Event>> batches;

  std::size_t event_count() const;
  bool empty() const { return batches.empty(); }
  void append(OrderedBatches&& other);
};

ProbMatrix build_prob_matrix(std::span<const Event> events, const DifferenceTable& diffs);

/// Direct route: every entry enumerates the two clients' sample sets. `dists[k]`
/// must belong to client k.
ProbMatrix build_prob_matrix_direct(std::span<const Event> events, std::span<const CorrectionDistribution> dists);

/// Strongly connected components of the graph with edges i->j where
/// P(i, j) > threshold, as lists of vertex indices. Components come out in
/// Tarjan's completion order (reverse topological).
std::vector<std::vector<std::size_t>> strongly_connected_components(const ProbMatrix& p, EdgeThreshold threshold);

/// Batches for a prebuilt matrix. Components of the condensation are emitted
/// in topological order; incomparable components are linearized by their
/// smallest member under (local ts, client, seq). Events inside a batch are
/// listed in that same order.
OrderedBatches order_from_matrix(std::span<const Event> events, const ProbMatrix& p, EdgeThreshold threshold);

OrderedBatches order_events(std::span<const Event> events, const DifferenceTable& diffs,
                            EdgeThreshold threshold = EdgeThreshold{});

/// Draws Gaussian correction samples per client, orders one event per client
/// at a shared timestamp, and reports whether the result is a total order by
/// ascending mean.
bool gaussian_transitivity_check(std::span<const double> means, std::span<const double> sigmas,
                                 std::size_t sample_count, std::uint64_t seed);

/// CSV `batch_index,client_id,seq,local_ts_ns`.
void write_batches_csv(std::ostream& out, const OrderedBatches& batches);

}  // namespace probseq
