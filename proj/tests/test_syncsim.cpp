#include <doctest.h>

#include <cmath>
#include <sstream>

#include "probseq/syncsim.hpp"

using namespace probseq;

TEST_SUITE("syncsim") {
  TEST_CASE("ntp offset estimate examples") {
    CHECK(ntp_offset_estimate({0, 150, 160, 110}) == 100);
    CHECK(ntp_offset_estimate({1000, 1040, 1040, 1080}) == 0);
    CHECK(ntp_offset_estimate({0, 10, 10, 40}) == -10);
    // truncation toward zero
    CHECK(ntp_offset_estimate({0, 1, 1, 1}) == 0);
    CHECK(ntp_offset_estimate({0, 0, 0, 3}) == -1);
  }

  TEST_CASE("correction ring buffer keeps the newest samples oldest-first") {
    CorrectionDistribution d(ClientId{2}, 3);
    CHECK(d.empty());
    for (int v : {1, 2, 3, 4, 5}) d.append(v);
    CHECK(d.size() == 3);
    CHECK(d.samples() == std::vector<std::int64_t>{3, 4, 5});
    CHECK(d.client() == ClientId{2});
    CHECK_THROWS_AS(CorrectionDistribution(ClientId{0}, 0), ConfigError);
  }

  TEST_CASE("latency sampling") {
    Rng rng(1);
    CHECK(sample_latency(LatencyModel::constant(5000), rng) == 5000);
    CHECK(sample_latency(LatencyModel::empirical({10, 10, 10}), rng) == 10);
    CHECK_THROWS_AS(LatencyModel::empirical({}).validate(), ConfigError);
    CHECK_THROWS_AS(sample_latency(LatencyModel::empirical({}), rng), ConfigError);

    Rng a(77), b(77);
    const auto model = LatencyModel::normal(50'000.0, 10'000.0);
    for (int i = 0; i < 100; ++i) CHECK(sample_latency(model, a) == sample_latency(model, b));

    // negative draws clamp to zero
    Rng c(3);
    const auto wide = LatencyModel::normal(0.0, 1000.0);
    for (int i = 0; i < 200; ++i) CHECK(sample_latency(wide, c) >= 0);
  }

  TEST_CASE("support bounds") {
    CHECK(LatencyModel::constant(40).uncertainty() == 0.0);
    CHECK(LatencyModel::empirical({5, 9, 7}).d_min() == 5.0);
    CHECK(LatencyModel::empirical({5, 9, 7}).d_max() == 9.0);
    CHECK(std::isinf(LatencyModel::normal(10, 1).d_max()));
  }

  TEST_CASE("fit_distribution") {
    const std::vector<std::int64_t> three{1, 2, 3};
    const auto n = fit_distribution(LatencyKind::kNormal, three);
    CHECK(n.kind == LatencyKind::kNormal);
    CHECK(n.mean == doctest::Approx(2.0));
    CHECK(n.sigma * n.sigma == doctest::Approx(2.0 / 3.0));

    const std::vector<std::int64_t> sevens{7, 7, 7};
    for (auto kind : {LatencyKind::kNormal, LatencyKind::kPareto, LatencyKind::kLognormal, LatencyKind::kConstant}) {
      const auto m = fit_distribution(kind, sevens);
      CHECK(m.kind == LatencyKind::kConstant);
      CHECK(m.value == 7.0);
    }

    Rng rng(5);
    std::vector<std::int64_t> clusters;
    for (int i = 0; i < 500; ++i) {
      clusters.push_back(sample_latency(LatencyModel::normal(10.0, 1.0), rng));
      clusters.push_back(sample_latency(LatencyModel::normal(100.0, 5.0), rng));
    }
    const auto bm = fit_distribution(LatencyKind::kBimodal, clusters);
    REQUIRE(bm.kind == LatencyKind::kBimodal);
    const double lo = std::min(bm.mean, bm.mean2), hi = std::max(bm.mean, bm.mean2);
    CHECK(lo == doctest::Approx(10.0).epsilon(0.1));
    CHECK(hi == doctest::Approx(100.0).epsilon(0.1));

    const auto pm = fit_distribution(LatencyKind::kPareto, clusters);
    CHECK(pm.kind == LatencyKind::kPareto);
    CHECK(pm.shape > 0.0);
    CHECK(pm.d_min() == doctest::Approx(static_cast<double>(*std::min_element(clusters.begin(), clusters.end()))));

    CHECK_THROWS_AS(fit_distribution(LatencyKind::kNormal, std::vector<std::int64_t>{}), ConfigError);
    CHECK_THROWS_AS(fit_distribution(LatencyKind::kBimodal, three), ConfigError);
  }

  TEST_CASE("run_sync: 1 s at 100 ms gives 10 samples") {
    SyncParams p;
    p.interval_ns = 100'000'000;
    p.duration_ns = 1'000'000'000;
    const auto r = run_sync(ClientId{0}, {}, {}, LatencyModel::constant(50'000), p, 1);
    CHECK(r.corrections.size() == 10);
    CHECK(r.steps.size() == 10);
  }

  TEST_CASE("run_sync: constant symmetric latency converges after one probe") {
    SyncParams p;
    p.duration_ns = 500'000'000;
    const std::int64_t x = 123'456;
    const auto r = run_sync(ClientId{0}, VirtualClock{-x, 0.0, {}}, {}, LatencyModel::constant(40'000), p, 9);
    const auto s = r.corrections.samples();
    CHECK(s.front() == x);
    for (std::size_t i = 1; i < s.size(); ++i) CHECK(s[i] == 0);
    CHECK(std::llabs(r.clock.offset_ns) <= 1);
  }

  TEST_CASE("run_sync: zero latency, no error gives zero corrections") {
    SyncParams p;
    const auto r = run_sync(ClientId{1}, {}, {}, LatencyModel::constant(0), p, 4);
    for (auto v : r.corrections.samples()) CHECK(v == 0);
  }

  TEST_CASE("run_sync is deterministic per seed") {
    SyncParams p;
    const VirtualClock c{1'000'000, 15.0, {}};
    const auto a = run_sync(ClientId{0}, c, {}, LatencyModel::normal(50'000, 10'000), p, 11);
    const auto b = run_sync(ClientId{0}, c, {}, LatencyModel::normal(50'000, 10'000), p, 11);
    const auto d = run_sync(ClientId{0}, c, {}, LatencyModel::normal(50'000, 10'000), p, 12);
    CHECK(a.corrections.samples() == b.corrections.samples());
    CHECK(a.corrections.samples() != d.corrections.samples());
  }

  TEST_CASE("corrections csv round trip") {
    std::vector<CorrectionDistribution> d{CorrectionDistribution(ClientId{0}, std::vector<std::int64_t>{5, -3}),
                                          CorrectionDistribution(ClientId{1}, std::vector<std::int64_t>{7})};
    std::stringstream ss;
    write_corrections_csv(ss, d);
    CHECK(ss.str() == "client_id,probe_index,correction_ns\n0,0,5\n0,1,-3\n1,0,7\n");
    const auto back = read_corrections_csv(ss);
    REQUIRE(back.size() == 2);
    CHECK(back[0].samples() == d[0].samples());
    CHECK(back[1].samples() == d[1].samples());

    std::stringstream bad("client,probe,c\n");
    CHECK_THROWS_AS(read_corrections_csv(bad), ConfigError);
    std::stringstream gap("client_id,probe_index,correction_ns\n1,0,3\n");
    CHECK_THROWS_AS(read_corrections_csv(gap), ConfigError);
  }

  TEST_CASE("latency trace parsing") {
    std::stringstream ok("10\n20\n\n30\n");
    CHECK(parse_latency_trace(ok) == std::vector<std::int64_t>{10, 20, 30});
    std::stringstream neg("10\n-1\n");
    CHECK_THROWS_AS(parse_latency_trace(neg), ConfigError);
    std::stringstream empty("");
    CHECK_THROWS_AS(parse_latency_trace(empty), ConfigError);
  }
}
