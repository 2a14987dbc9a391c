#include "probseq/pairwise.hpp"

#include <algorithm>
#include <string>

namespace probseq {

PrecedingProbability::PrecedingProbability(double value) : value_(value) {
  if (!(value >= 0.0 && value <= 1.0)) throw std::invalid_argument("preceding probability outside [0,1]");
}

PrecedingProbability PrecedingProbability::from_count(std::uint64_t count, std::uint64_t total) {
  if (total == 0) throw std::invalid_argument("preceding probability over an empty distribution");
  return PrecedingProbability(static_cast<double>(count) / static_cast<double>(total));
}

std::uint64_t DifferenceDistribution::count_below(std::int64_t tau) const {
  return static_cast<std::uint64_t>(std::lower_bound(diffs.begin(), diffs.end(), tau) - diffs.begin());
}

DifferenceTable::DifferenceTable(std::size_t clients, std::vector<DifferenceDistribution> pairs)
    : clients_(clients), pairs_(std::move(pairs)) {
  if (pairs_.size() != clients_ * clients_) throw std::invalid_argument("difference table must hold n*n pairs");
}

const DifferenceDistribution& DifferenceTable::at(ClientId i, ClientId j) const {
  if (!contains(i, j)) {
    throw std::out_of_range("no difference distribution for pair (" + to_string(i) + "," + to_string(j) + ")");
  }
  return pairs_[i.value * clients_ + j.value];
}

PrecedingProbability pairwise_probability(LocalTimestamp x, LocalTimestamp y, std::span<const std::int64_t> cx,
                                          std::span<const std::int64_t> cy) {
  if (cx.empty() || cy.empty()) throw std::invalid_argument("pairwise_probability: empty correction distribution");
  const std::int64_t tau = ticks::sub(y.ticks, x.ticks);
  std::uint64_t count = 0;
  for (std::int64_t a : cx) {
    for (std::int64_t b : cy) {
      if (ticks::sub(a, b) < tau) ++count;
    }
  }
  return PrecedingProbability::from_count(count, static_cast<std::uint64_t>(cx.size()) * cy.size());
}

PrecedingProbability pairwise_probability(LocalTimestamp x, LocalTimestamp y, const CorrectionDistribution& cx,
                                          const CorrectionDistribution& cy) {
  const auto a = cx.samples();
  const auto b = cy.samples();
  return pairwise_probability(x, y, a, b);
}

PrecedingProbability pairwise_probability_merged(LocalTimestamp x, LocalTimestamp y,
                                                 std::span<const std::int64_t> cx,
                                                 std::span<const std::int64_t> cy) {
  if (cx.empty() || cy.empty()) throw std::invalid_argument("pairwise_probability: empty correction distribution");
  const std::int64_t tau = ticks::sub(y.ticks, x.ticks);
  std::vector<std::int64_t> a(cx.begin(), cx.end());
  std::vector<std::int64_t> b(cy.begin(), cy.end());
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  // a - b < tau  <=>  b > a - tau. As a grows, the first such b moves right.
  std::uint64_t count = 0;
  std::size_t j = 0;
  for (std::int64_t ai : a) {
    const std::int64_t bound = ticks::sub(ai, tau);
    while (j < b.size() && b[j] <= bound) ++j;
    count += b.size() - j;
  }
  return PrecedingProbability::from_count(count, static_cast<std::uint64_t>(a.size()) * b.size());
}

DifferenceDistribution difference_distribution(const CorrectionDistribution& ci, const CorrectionDistribution& cj,
                                               SimTime built_at) {
  if (ci.empty() || cj.empty()) throw std::invalid_argument("difference distribution over an empty distribution");
  DifferenceDistribution d{ci.client(), cj.client(), {}, built_at};
  const auto a = ci.samples();
  const auto b = cj.samples();
  d.diffs.reserve(a.size() * b.size());
  for (std::int64_t x : a) {
    for (std::int64_t y : b) d.diffs.push_back(ticks::sub(x, y));
  }
  std::sort(d.diffs.begin(), d.diffs.end());
  return d;
}

DifferenceTable precompute_diffs(std::span<const CorrectionDistribution> dists, SimTime built_at) {
  for (std::size_t k = 0; k < dists.size(); ++k) {
    if (dists[k].client().value != k) {
      throw std::invalid_argument("precompute_diffs: distribution " + std::to_string(k) + " belongs to client " +
                                  to_string(dists[k].client()));
    }
  }
  const std::size_t n = dists.size();
  std::vector<DifferenceDistribution> pairs(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) {
      pairs[i * n + j] = difference_distribution(dists[i], dists[j], built_at);
      if (i == j) continue;
      // D_ji is D_ij negated, which reverses the sort order.
      const auto& forward = pairs[i * n + j].diffs;
      DifferenceDistribution& mirror = pairs[j * n + i];
      mirror.first = dists[j].client();
      mirror.second = dists[i].client();
      mirror.built_at = built_at;
      mirror.diffs.resize(forward.size());
      std::transform(forward.rbegin(), forward.rend(), mirror.diffs.begin(),
                     [](std::int64_t v) { return ticks::sub(0, v); });
    }
  }
  return DifferenceTable(n, std::move(pairs));
}

PrecedingProbability pairwise_query(const Event& ei, const Event& ej, const DifferenceDistribution& d) {
  if (ei.client != d.first || ej.client != d.second) {
    throw std::invalid_argument("pairwise_query: distribution is for (" + to_string(d.first) + "," +
                                to_string(d.second) + "), events are from (" + to_string(ei.client) + "," +
                                to_string(ej.client) + ")");
  }
  const std::int64_t tau = ticks::sub(ej.ts.ticks, ei.ts.ticks);
  return PrecedingProbability::from_count(d.count_below(tau), d.diffs.size());
}

}  // namespace probseq
