#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <random>

#include "probseq/metrics.hpp"

using namespace probseq;

namespace {

Event ev(std::uint32_t c, std::uint64_t seq = 0) { return {ClientId{c}, LocalTimestamp{0}, seq, {}}; }

GroundTruth truth_of(std::initializer_list<std::uint32_t> clients) {
  GroundTruth t;
  for (auto c : clients) t.order.push_back({ClientId{c}, 0});
  return t;
}

OrderedBatches batches(std::vector<std::vector<std::uint32_t>> groups) {
  OrderedBatches b;
  for (auto& g : groups) {
    b.batches.emplace_back();
    for (auto c : g) b.batches.back().push_back(ev(c));
  }
  return b;
}

}  // namespace

TEST_SUITE("metrics") {
  TEST_CASE("ras examples") {
    const auto t = truth_of({0, 1, 2});
    CHECK(ras(batches({{0}, {1}, {2}}), t).value == 1.0);
    CHECK(ras(batches({{2}, {1}, {0}}), t).value == -1.0);
    const auto r = ras(batches({{0, 1}, {2}}), t);
    CHECK(r.value == doctest::Approx(2.0 / 3.0));
    CHECK(r.correct == 2);
    CHECK(r.unordered == 1);
    CHECK(r.incorrect == 0);
    CHECK(ras(batches({{0, 1, 2}}), t).value == 0.0);
  }

  TEST_CASE("ras rejects mismatched partitions") {
    const auto t = truth_of({0, 1, 2});
    CHECK_THROWS_AS(ras(batches({{0}, {1}}), t), std::invalid_argument);
    CHECK_THROWS_AS(ras(batches({{0}, {1}, {2}, {3}}), t), std::invalid_argument);
    CHECK_THROWS_AS(ras(batches({{0}, {1}, {1}}), t), std::invalid_argument);
  }

  TEST_CASE("windowed ras examples") {
    const auto t = truth_of({0, 1, 2, 3});
    CHECK(windowed_ras(batches({{0}, {1}, {3}, {2}}), t, 2) == 0.0);
    CHECK(windowed_ras(batches({{0}, {1}, {3}, {2}}), t, 4) == ras(batches({{0}, {1}, {3}, {2}}), t).value);
    CHECK(windowed_ras(batches({{0}, {1}, {2}, {3}}), t, 3) == 1.0);
    CHECK_THROWS_AS(windowed_ras(batches({{0}, {1}, {2}, {3}}), t, 5), std::invalid_argument);
    CHECK_THROWS_AS(windowed_ras(batches({{0}, {1}, {2}, {3}}), t, 1), std::invalid_argument);
  }

  TEST_CASE("property: antisymmetry, all-one-batch and relabeling") {
    std::mt19937_64 rng(17);
    for (int iter = 0; iter < 500; ++iter) {
      const std::uint32_t n = 2 + rng() % 15;
      std::vector<std::uint32_t> perm(n);
      std::iota(perm.begin(), perm.end(), 0u);
      std::shuffle(perm.begin(), perm.end(), rng);
      GroundTruth t;
      for (auto c : perm) t.order.push_back({ClientId{c}, 0});
      // random batching of a random permutation
      std::vector<std::uint32_t> out(perm);
      std::shuffle(out.begin(), out.end(), rng);
      OrderedBatches fwd;
      for (auto c : out) {
        if (fwd.batches.empty() || rng() % 3 == 0) fwd.batches.emplace_back();
        fwd.batches.back().push_back(ev(c));
      }
      OrderedBatches rev{std::vector<std::vector<Event>>(fwd.batches.rbegin(), fwd.batches.rend())};
      CHECK(ras(rev, t).value == doctest::Approx(-ras(fwd, t).value));
      OrderedBatches one;
      one.batches.emplace_back();
      for (auto c : out) one.batches[0].push_back(ev(c));
      CHECK(ras(one, t).value == 0.0);
      // relabel clients consistently
      std::vector<std::uint32_t> relabel(n);
      std::iota(relabel.begin(), relabel.end(), 100u);
      std::shuffle(relabel.begin(), relabel.end(), rng);
      GroundTruth t2;
      for (auto k : t.order) t2.order.push_back({ClientId{relabel[k.client.value]}, 0});
      OrderedBatches f2 = fwd;
      for (auto& b : f2.batches)
        for (auto& e : b) e.client = ClientId{relabel[e.client.value]};
      CHECK(ras(f2, t2).value == ras(fwd, t).value);
    }
  }

  TEST_CASE("rank_stats examples") {
    std::vector<std::vector<int>> fixed(10);
    for (auto& row : fixed) {
      row.resize(10);
      std::iota(row.begin(), row.end(), 1);
    }
    CHECK(rank_stats(fixed).variance == 8.25);
    std::vector<std::vector<int>> rot(10, std::vector<int>(10));
    for (int t = 0; t < 10; ++t)
      for (int c = 0; c < 10; ++c) rot[t][c] = (c + t) % 10 + 1;
    const auto s = rank_stats(rot);
    CHECK(s.variance == 0.0);
    for (double a : s.avg_rank) CHECK(a == 5.5);
    CHECK(rank_stats(std::vector<std::vector<int>>{{1}, {1}}).variance == 0.0);
    CHECK_THROWS_AS(rank_stats(std::vector<std::vector<int>>{{1, 1}}), std::invalid_argument);
    CHECK_THROWS_AS(rank_stats(std::vector<std::vector<int>>{{1, 3}}), std::invalid_argument);
  }

  TEST_CASE("bound calculators") {
    CHECK(drift_bound(20.0, 20'000'000.0) == 800.0);
    CHECK(offset_bound(40'000.0, 2) == 20'000.0);
    CHECK(offset_bound(0.0, 7) == 0.0);
    CHECK_THROWS_AS(offset_bound(10.0, 1), std::invalid_argument);
  }
}
