#include <doctest.h>

#include <map>
#include <random>
#include <sstream>

#include "probseq/online.hpp"

using namespace probseq;

namespace {

Event ev(std::uint32_t c, std::int64_t ts, std::uint64_t seq) { return {ClientId{c}, LocalTimestamp{ts}, seq, {}}; }

DifferenceTable zero_width(std::uint32_t n) {
  std::vector<CorrectionDistribution> d;
  for (std::uint32_t c = 0; c < n; ++c) d.emplace_back(ClientId{c}, std::vector<std::int64_t>{0});
  return precompute_diffs(d);
}

}  // namespace

TEST_SUITE("online") {
  TEST_CASE("stable_time examples") {
    DifferenceDistribution d{ClientId{0}, ClientId{1}, {-5, 0, 5, 10}, {}};
    CHECK(stable_time(d, LocalTimestamp{100}, StabilityThreshold(0.75)).ticks == 106);
    CHECK(stable_time(d, LocalTimestamp{100}, StabilityThreshold(1.0)).ticks == 111);
    CHECK(stable_time(d, LocalTimestamp{100}, StabilityThreshold(0.51)).ticks == 106);
    const auto t = zero_width(3);
    for (auto s : stable_times(LocalTimestamp{40}, ClientId{1}, t, StabilityThreshold{})) CHECK(s.ticks == 41);
    CHECK_THROWS_AS(StabilityThreshold(0.5), std::invalid_argument);
    CHECK_THROWS_AS(StabilityThreshold(1.01), std::invalid_argument);
  }

  TEST_CASE("property: stable_time is the smallest t meeting p") {
    std::mt19937_64 rng(5);
    std::uniform_int_distribution<std::int64_t> val(-40, 40);
    for (int iter = 0; iter < 300; ++iter) {
      std::vector<std::int64_t> a(1 + rng() % 9), b(1 + rng() % 9);
      for (auto& x : a) x = val(rng);
      for (auto& x : b) x = val(rng);
      std::vector<CorrectionDistribution> d{CorrectionDistribution(ClientId{0}, a), CorrectionDistribution(ClientId{1}, b)};
      const auto tab = precompute_diffs(d);
      const StabilityThreshold p(0.55 + 0.45 * static_cast<double>(rng() % 100) / 99.0);
      const auto& pair = tab.at(ClientId{0}, ClientId{1});
      const Event f = ev(0, val(rng), 0);
      const auto s = stable_time(pair, f.ts, p);
      CHECK(pairwise_query(f, ev(1, s.ticks, 0), pair).value() >= p.value());
      CHECK(pairwise_query(f, ev(1, s.ticks - 1, 0), pair).value() < p.value());
    }
  }

  TEST_CASE("no emission until every client is stable") {
    const auto t = zero_width(2);
    ProbabilisticPolicy pol(t, EdgeThreshold{}, StabilityThreshold{});
    OnlineSequencer s(pol);
    CHECK(s.on_event_arrival(ev(0, 100, 0)).empty());
    CHECK(s.buffered() == 1);
    CHECK(s.on_heartbeat({ClientId{1}, LocalTimestamp{100}}).empty());  // needs 101
    CHECK(s.watermark(ClientId{1})->ticks == 100);
    CHECK(s.on_heartbeat({ClientId{1}, LocalTimestamp{50}}).empty());
    CHECK(s.watermark(ClientId{1})->ticks == 100);
    CHECK(s.on_heartbeat({ClientId{0}, LocalTimestamp{500}}).empty());  // client 1 still lagging
    const auto out = s.on_heartbeat({ClientId{1}, LocalTimestamp{101}});
    REQUIRE(out.batches.size() == 1);
    CHECK(out.batches[0][0].ts.ticks == 100);
    CHECK(s.buffered() == 0);
    CHECK(s.on_heartbeat({ClientId{1}, LocalTimestamp{900}}).empty());  // empty buffer
  }

  TEST_CASE("single client: event alone never stabilizes itself") {
    const auto t = zero_width(1);
    ProbabilisticPolicy pol(t, EdgeThreshold{}, StabilityThreshold{});
    OnlineSequencer s(pol);
    CHECK(s.on_event_arrival(ev(0, 10, 0)).empty());
    CHECK(s.on_event_arrival(ev(0, 11, 1)).empty());  // frontier moved to 11
    CHECK(s.on_heartbeat({ClientId{0}, LocalTimestamp{12}}).batches.size() == 2);
  }

  TEST_CASE("protocol errors") {
    const auto t = zero_width(2);
    ProbabilisticPolicy pol(t, EdgeThreshold{}, StabilityThreshold{});
    OnlineSequencer s(pol);
    s.on_event_arrival(ev(0, 10, 3));
    CHECK_THROWS_AS(s.on_event_arrival(ev(0, 12, 3)), ProtocolError);
    CHECK_THROWS_AS(s.on_event_arrival(ev(0, 12, 2)), ProtocolError);
    CHECK_THROWS_AS(s.on_event_arrival(ev(0, 9, 4)), ProtocolError);
    CHECK_THROWS_AS(s.on_event_arrival(ev(5, 9, 0)), ProtocolError);
    CHECK_THROWS_AS(s.on_heartbeat({ClientId{7}, LocalTimestamp{0}}), ProtocolError);
    CHECK_FALSE(s.watermark(ClientId{1}).has_value());
  }

  TEST_CASE("two-phase: emitted prefix is never revisited") {
    const auto t = zero_width(2);
    ProbabilisticPolicy pol(t, EdgeThreshold{}, StabilityThreshold{});
    OnlineSequencer s(pol);
    s.on_event_arrival(ev(0, 10, 0));
    s.on_event_arrival(ev(1, 12, 0));
    s.on_heartbeat({ClientId{0}, LocalTimestamp{20}});
    CHECK(s.emitted_batches() == 0);  // client 1 sits at 12, frontier needs 13
    s.on_heartbeat({ClientId{1}, LocalTimestamp{20}});
    CHECK(s.emitted_batches() == 2);
    s.on_event_arrival(ev(1, 30, 1));
    s.on_event_arrival(ev(0, 25, 1));
    CHECK(s.on_heartbeat({ClientId{1}, LocalTimestamp{40}}).empty());
    const auto second = s.on_heartbeat({ClientId{0}, LocalTimestamp{40}});
    REQUIRE(second.batches.size() == 2);
    CHECK(second.batches[0][0].ts.ticks == 25);
    const auto& log = s.emission_log();
    REQUIRE(log.size() == 4);
    for (std::size_t i = 0; i < log.size(); ++i) CHECK(log[i].batch_index == i);
    CHECK(log[0].event.ts.ticks == 10);
    std::ostringstream out;
    write_emission_log_csv(out, log);
    CHECK(out.str().rfind("emit_sim_time_ns,batch_index,client_id,seq,local_ts_ns\n0,0,0,0,10\n", 0) == 0);
  }

  TEST_CASE("ordering cached until the buffer changes") {
    const auto t = zero_width(2);
    ProbabilisticPolicy pol(t, EdgeThreshold{}, StabilityThreshold{});
    OnlineSequencer s(pol);
    s.on_event_arrival(ev(0, 10, 0));
    for (int k = 0; k < 5; ++k) s.on_heartbeat({ClientId{0}, LocalTimestamp{11 + k}});
    CHECK(s.orderings_computed() == 1);
    s.on_event_arrival(ev(0, 20, 1));
    CHECK(s.orderings_computed() == 2);
  }

  TEST_CASE("silent client is excluded after the timeout") {
    const auto t = zero_width(2);
    ProbabilisticPolicy pol(t, EdgeThreshold{}, StabilityThreshold{});
    OnlineSequencer s(pol, OnlineOptions{1000}, SimTime{0});
    CHECK(s.on_event_arrival(ev(0, 10, 0), SimTime{500}).empty());
    CHECK_FALSE(s.excluded(ClientId{1}, SimTime{1000}));
    CHECK(s.excluded(ClientId{1}, SimTime{1001}));
    const auto out = s.on_heartbeat({ClientId{0}, LocalTimestamp{11}}, SimTime{1001});
    CHECK(out.batches.size() == 1);
  }

  TEST_CASE("interval policy stable times") {
    IntervalPolicy pooled(3, ErrorBound{10, 0.0});
    for (auto s : pooled.stable_times(LocalTimestamp{100}, ClientId{0})) CHECK(s.ticks == 121);
    IntervalPolicy per(std::vector<ErrorBound>{{1, 0.0}, {5, 0.0}});
    const auto s = per.stable_times(LocalTimestamp{100}, ClientId{1});
    CHECK(s[0].ticks == 107);
    CHECK(s[1].ticks == 111);
  }

  TEST_CASE("property: online safety with random delivery") {
    // Zero-width corrections: the committed order must be the timestamp order,
    // whatever the interleaving of per-client FIFO streams.
    std::mt19937_64 rng(31);
    for (int iter = 0; iter < 50; ++iter) {
      const std::uint32_t n = 2 + rng() % 4;
      const auto t = zero_width(n);
      ProbabilisticPolicy pol(t, EdgeThreshold{}, StabilityThreshold{});
      OnlineSequencer s(pol);
      std::vector<std::vector<Event>> streams(n);
      for (std::uint32_t c = 0; c < n; ++c) {
        std::int64_t ts = 0;
        for (std::uint64_t k = 0; k < 6; ++k) {
          ts += 1 + static_cast<std::int64_t>(rng() % 50);
          streams[c].push_back(ev(c, ts * 8 + c, k));  // distinct across clients
        }
      }
      std::vector<std::size_t> pos(n);
      std::vector<Event> emitted;
      auto take = [&](const OrderedBatches& b) {
        for (const auto& batch : b.batches)
          for (const auto& e : batch) emitted.push_back(e);
      };
      std::size_t remaining = 6 * n;
      while (remaining) {
        const auto c = static_cast<std::uint32_t>(rng() % n);
        if (pos[c] == streams[c].size()) continue;
        take(s.on_event_arrival(streams[c][pos[c]++]));
        --remaining;
      }
      for (std::uint32_t c = 0; c < n; ++c) take(s.on_heartbeat({ClientId{c}, LocalTimestamp{1'000'000}}));
      REQUIRE(emitted.size() == 6 * n);
      for (std::size_t i = 1; i < emitted.size(); ++i) CHECK(emitted[i - 1].ts < emitted[i].ts);
    }
  }
}
