#include <doctest.h>

#include <limits>

#include "probseq/rng.hpp"
#include "probseq/timebase.hpp"

using namespace probseq;

TEST_SUITE("timebase") {
  TEST_CASE("clock_read examples") {
    CHECK(clock_read(VirtualClock{0, 0.0, {}}, SimTime{1000}).ticks == 1000);
    CHECK(clock_read(VirtualClock{500, 0.0, {}}, SimTime{1000}).ticks == 1500);
    CHECK(clock_read(VirtualClock{0, 20.0, SimTime{0}}, SimTime{20'000'000}).ticks == 20'000'400);
  }

  TEST_CASE("negative drift and rounding to nearest") {
    // -1.5 ppm over 1e6 ns = -1.5 ns, ties away from zero
    CHECK(clock_read(VirtualClock{0, -1.5, {}}, SimTime{1'000'000}).ticks == 1'000'000 - 2);
    CHECK(clock_read(VirtualClock{0, 0.4, {}}, SimTime{1'000'000}).ticks == 1'000'000);
  }

  TEST_CASE("drift measured from the epoch") {
    VirtualClock c{0, 100.0, SimTime{1'000'000}};
    CHECK(clock_read(c, SimTime{1'000'000}).ticks == 1'000'000);
    CHECK(clock_read(c, SimTime{2'000'000}).ticks == 2'000'100);
    CHECK_THROWS_AS(clock_read(c, SimTime{0}), std::invalid_argument);
  }

  TEST_CASE("clock_step") {
    CHECK(clock_step(VirtualClock{100, 0.0, {}}, -100).offset_ns == 0);
    CHECK(clock_step(VirtualClock{0, 0.0, {}}, 250).offset_ns == 250);
    const VirtualClock c{17, 3.0, SimTime{5}};
    const auto a = clock_step(clock_step(c, 40), -13);
    const auto b = clock_step(c, 27);
    CHECK(a.offset_ns == b.offset_ns);
    CHECK(a.drift_ppm == b.drift_ppm);
    CHECK(a.epoch == b.epoch);
    CHECK_THROWS_AS(clock_step(VirtualClock{std::numeric_limits<std::int64_t>::max(), 0.0, {}}, 1), TickOverflow);
  }

  TEST_CASE("tick arithmetic overflow is an error") {
    constexpr auto big = std::numeric_limits<std::int64_t>::max();
    CHECK_THROWS_AS(ticks::add(big, 1), TickOverflow);
    CHECK_THROWS_AS(ticks::sub(-big, 2), TickOverflow);
    CHECK_THROWS_AS(ticks::mul(big, 2), TickOverflow);
    CHECK_THROWS_AS(ticks::round_nearest(1e19), TickOverflow);
    CHECK_THROWS_AS(ticks::round_nearest(std::nan("")), TickOverflow);
    CHECK(ticks::round_nearest(2.5) == 3);
    CHECK(ticks::round_nearest(-2.5) == -3);
    CHECK_THROWS_AS(clock_read(VirtualClock{big, 0.0, {}}, SimTime{1}), TickOverflow);
  }

  TEST_CASE("event stream keeps seq and ts monotone") {
    EventStream s(ClientId{3});
    const auto a = s.next(LocalTimestamp{100});
    const auto b = s.next(LocalTimestamp{90});  // clock stepped back
    const auto c = s.next(LocalTimestamp{150}, SimTime{7});
    CHECK(a.seq == 0);
    CHECK(b.seq == 1);
    CHECK(c.seq == 2);
    CHECK(b.ts.ticks == 100);
    CHECK(c.ts.ticks == 150);
    CHECK(c.true_time->ticks == 7);
    CHECK(a.client == ClientId{3});
    CHECK(s.stamp(LocalTimestamp{120}).ticks == 150);
    CHECK(s.issued() == 3);
  }

  TEST_CASE("timestamp_order is lexicographic") {
    Event a{ClientId{1}, LocalTimestamp{5}, 0, {}};
    Event b{ClientId{0}, LocalTimestamp{5}, 9, {}};
    Event c{ClientId{0}, LocalTimestamp{4}, 10, {}};
    CHECK(timestamp_order(c, b));
    CHECK(timestamp_order(b, a));
    CHECK_FALSE(timestamp_order(a, a));
  }

  TEST_CASE("seed derivation separates streams") {
    CHECK(derive_seed(1, "a") != derive_seed(1, "b"));
    CHECK(derive_seed(1, "a", 0) != derive_seed(1, "a", 1));
    CHECK(derive_seed(1, "a") != derive_seed(2, "a"));
    CHECK(derive_seed(42, "x", 3) == derive_seed(42, "x", 3));
    auto r1 = make_rng(9, "s");
    auto r2 = make_rng(9, "s");
    CHECK(r1() == r2());
  }
}
