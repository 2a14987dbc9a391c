#include <doctest.h>

#include <algorithm>
#include <map>
#include <random>
#include <sstream>

#include "probseq/sequencer.hpp"

using namespace probseq;

namespace {

Event ev(std::uint32_t c, std::int64_t ts, std::uint64_t seq = 0) { return {ClientId{c}, LocalTimestamp{ts}, seq, {}}; }

std::vector<CorrectionDistribution> efron() {
  return {CorrectionDistribution(ClientId{0}, std::vector<std::int64_t>{2, 4, 9}), CorrectionDistribution(ClientId{1}, std::vector<std::int64_t>{1, 6, 8}),
          CorrectionDistribution(ClientId{2}, std::vector<std::int64_t>{3, 5, 7})};
}

std::map<EventKey, std::size_t> batch_index(const OrderedBatches& b) {
  std::map<EventKey, std::size_t> out;
  for (std::size_t i = 0; i < b.batches.size(); ++i)
    for (const auto& e : b.batches[i]) out[e.key()] = i;
  return out;
}

}  // namespace

TEST_SUITE("sequencer") {
  TEST_CASE("zero-width corrections give a 0/1 matrix") {
    std::vector<CorrectionDistribution> d{CorrectionDistribution(ClientId{0}, std::vector<std::int64_t>{0}), CorrectionDistribution(ClientId{1}, std::vector<std::int64_t>{0})};
    const auto t = precompute_diffs(d);
    const std::vector<Event> es{ev(0, 0), ev(1, 10)};
    const auto p = build_prob_matrix(es, t);
    CHECK(p(0, 1) == 1.0);
    CHECK(p(1, 0) == 0.0);
    CHECK(p(0, 0) == 0.0);
    const auto b = order_events(es, t);
    REQUIRE(b.batches.size() == 2);
    CHECK(b.batches[0][0].client == ClientId{0});
    CHECK(b.batches[1][0].client == ClientId{1});
  }

  TEST_CASE("single event and empty input") {
    std::vector<CorrectionDistribution> d{CorrectionDistribution(ClientId{0}, std::vector<std::int64_t>{0})};
    const auto t = precompute_diffs(d);
    const std::vector<Event> one{ev(0, 5)};
    CHECK(build_prob_matrix(one, t).size() == 1);
    CHECK(order_events(one, t).batches.size() == 1);
    CHECK(order_events(std::vector<Event>{}, t).empty());
  }

  TEST_CASE("Efron triple: cyclic 5/9 and a single batch") {
    const auto d = efron();
    const auto t = precompute_diffs(d);
    const std::vector<Event> es{ev(0, 0), ev(1, 0), ev(2, 0)};  // A, B, C
    const auto p = build_prob_matrix(es, t);
    CHECK(p(1, 0) == 5.0 / 9.0);
    CHECK(p(2, 1) == 5.0 / 9.0);
    CHECK(p(0, 2) == 5.0 / 9.0);
    const auto direct = build_prob_matrix_direct(es, d);
    for (std::size_t i = 0; i < 3; ++i)
      for (std::size_t j = 0; j < 3; ++j) CHECK(direct(i, j) == p(i, j));
    const auto b = order_events(es, t);
    REQUIRE(b.batches.size() == 1);
    CHECK(b.batches[0].size() == 3);
  }

  TEST_CASE("missing pair distribution is an error") {
    std::vector<CorrectionDistribution> d{CorrectionDistribution(ClientId{0}, std::vector<std::int64_t>{0})};
    const auto t = precompute_diffs(d);
    const std::vector<Event> es{ev(0, 0), ev(4, 1)};
    CHECK_THROWS_AS(build_prob_matrix(es, t), std::out_of_range);
  }

  TEST_CASE("no edges: deterministic singletons in tie-break order") {
    std::vector<CorrectionDistribution> d{CorrectionDistribution(ClientId{0}, std::vector<std::int64_t>{0}),
                                          CorrectionDistribution(ClientId{1}, std::vector<std::int64_t>{0}),
                                          CorrectionDistribution(ClientId{2}, std::vector<std::int64_t>{0})};
    const auto t = precompute_diffs(d);
    std::vector<Event> es{ev(2, 7), ev(0, 7), ev(1, 7)};
    const auto a = order_events(es, t);
    std::reverse(es.begin(), es.end());
    const auto b = order_events(es, t);
    REQUIRE(a.batches.size() == 3);
    REQUIRE(b.batches.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) {
      CHECK(a.batches[i][0].client == ClientId{static_cast<std::uint32_t>(i)});
      CHECK(b.batches[i][0].key() == a.batches[i][0].key());
    }
  }

  TEST_CASE("happened-before: same client, exact corrections, earlier first") {
    std::vector<CorrectionDistribution> d{CorrectionDistribution(ClientId{0}, std::vector<std::int64_t>{42, 42})};
    const auto t = precompute_diffs(d);
    const std::vector<Event> es{ev(0, 20, 1), ev(0, 10, 0)};
    const auto b = order_events(es, t);
    REQUIRE(b.batches.size() == 2);
    CHECK(b.batches[0][0].seq == 0);
  }

  TEST_CASE("threshold validation") {
    CHECK_THROWS_AS(EdgeThreshold(1.0), std::invalid_argument);
    CHECK_THROWS_AS(EdgeThreshold(-0.01), std::invalid_argument);
    CHECK(EdgeThreshold(0.0).value() == 0.0);
  }

  TEST_CASE("properties on random instances") {
    std::mt19937_64 rng(99);
    std::uniform_int_distribution<std::int64_t> val(-30, 30);
    for (int iter = 0; iter < 200; ++iter) {
      const std::uint32_t n = 2 + rng() % 4;
      std::vector<CorrectionDistribution> d;
      for (std::uint32_t c = 0; c < n; ++c) {
        std::vector<std::int64_t> s(1 + rng() % 8);
        for (auto& x : s) x = val(rng);
        d.emplace_back(ClientId{c}, s);
      }
      const auto t = precompute_diffs(d);
      std::vector<Event> es;
      std::vector<std::uint64_t> seq(n);
      for (int k = 0; k < 12; ++k) {
        const auto c = static_cast<std::uint32_t>(rng() % n);
        es.push_back(ev(c, val(rng), seq[c]++));
      }
      const auto p = build_prob_matrix(es, t);
      for (double thr : {0.3, 0.5, 0.7}) {
        const auto b = order_events(es, t, EdgeThreshold(thr));
        // partition
        CHECK(b.event_count() == es.size());
        const auto idx = batch_index(b);
        CHECK(idx.size() == es.size());
        for (const auto& batch : b.batches) CHECK_FALSE(batch.empty());
        // edge consistency: no edge from a later batch to an earlier one
        for (std::size_t i = 0; i < es.size(); ++i)
          for (std::size_t j = 0; j < es.size(); ++j)
            if (idx.at(es[i].key()) > idx.at(es[j].key())) CHECK_FALSE(p(i, j) > thr);
      }
      // raising the threshold removes edges, so batches can only split
      const auto lo = batch_index(order_events(es, t, EdgeThreshold(0.5)));
      const auto hi = batch_index(order_events(es, t, EdgeThreshold(0.7)));
      for (std::size_t i = 0; i < es.size(); ++i)
        for (std::size_t j = 0; j < es.size(); ++j)
          if (hi.at(es[i].key()) == hi.at(es[j].key())) CHECK(lo.at(es[i].key()) == lo.at(es[j].key()));
      // input order does not matter
      std::vector<Event> shuffled = es;
      std::shuffle(shuffled.begin(), shuffled.end(), rng);
      const auto x = order_events(es, t), y = order_events(shuffled, t);
      REQUIRE(x.batches.size() == y.batches.size());
      for (std::size_t i = 0; i < x.batches.size(); ++i) {
        REQUIRE(x.batches[i].size() == y.batches[i].size());
        for (std::size_t k = 0; k < x.batches[i].size(); ++k) CHECK(x.batches[i][k].key() == y.batches[i][k].key());
      }
    }
  }

  TEST_CASE("poisoned true_time does not change the ordering") {
    const auto d = efron();
    const auto t = precompute_diffs(d);
    std::vector<Event> es{ev(0, 0), ev(1, 3), ev(2, -4), ev(0, 9, 1)};
    const auto clean = order_events(es, t);
    for (auto& e : es) e.true_time = SimTime{-999'999};
    const auto poisoned = order_events(es, t);
    REQUIRE(clean.batches.size() == poisoned.batches.size());
    for (std::size_t i = 0; i < clean.batches.size(); ++i)
      for (std::size_t k = 0; k < clean.batches[i].size(); ++k)
        CHECK(clean.batches[i][k].key() == poisoned.batches[i][k].key());
  }

  TEST_CASE("gaussian transitivity") {
    const std::vector<double> means{0, 1000, 2000}, sigmas{100, 100, 100};
    CHECK(gaussian_transitivity_check(means, sigmas, 5000, 1));
    const std::vector<double> two{0, 50}, s2{100, 100};
    CHECK(gaussian_transitivity_check(two, s2, 5000, 2));
  }

  TEST_CASE("batches csv") {
    OrderedBatches b;
    b.batches = {{ev(1, 5, 0)}, {ev(0, 6, 2), ev(2, 6, 0)}};
    std::ostringstream out;
    write_batches_csv(out, b);
    CHECK(out.str() == "batch_index,client_id,seq,local_ts_ns\n0,1,0,5\n1,0,2,6\n1,2,0,6\n");
  }
}
