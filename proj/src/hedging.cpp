#include <algorithm>
#include <cstdio>
#include <numeric>
#include <ostream>

#include "probseq/harness.hpp"
#include "probseq/rng.hpp"

namespace probseq {

void HedgingConfig::validate() const {
  if (n_clients == 0) throw ConfigError("hedging: n_clients must be positive");
  if (n_clients > n_machines) throw ConfigError("hedging: more clients than machines");
  if (trials == 0) throw ConfigError("hedging: trials must be positive");
  if (!(sigma_ns >= 0.0)) throw ConfigError("hedging: sigma must be non-negative");
}

namespace {

// latencies[t][m]: machine m's injected latency in trial t.
std::vector<std::vector<std::int64_t>> draw_latencies(const HedgingConfig& cfg) {
  Rng rng = make_rng(cfg.seed, "hedging-latency");
  std::vector<std::vector<std::int64_t>> out(cfg.trials, std::vector<std::int64_t>(cfg.n_machines));
  for (auto& trial : out) {
    for (std::size_t m = 0; m < cfg.n_machines; ++m) {
      const LatencyModel model = LatencyModel::normal(static_cast<double>(m + 1) * cfg.mean_step_ns, cfg.sigma_ns);
      trial[m] = sample_latency(model, rng);
    }
  }
  return out;
}

std::vector<std::vector<int>> ranks_for(const HedgingConfig& cfg, Rotation rotation,
                                        const std::vector<std::vector<std::int64_t>>& latencies) {
  std::vector<std::vector<int>> ranks;
  ranks.reserve(cfg.trials);
  std::vector<std::size_t> order(cfg.n_clients);
  std::vector<std::int64_t> response(cfg.n_clients);
  for (std::size_t t = 0; t < cfg.trials; ++t) {
    for (std::size_t c = 0; c < cfg.n_clients; ++c) {
      const std::size_t machine = rotation == Rotation::kNone ? c : (c + t) % cfg.n_machines;
      response[c] = latencies[t][machine];
    }
    std::iota(order.begin(), order.end(), 0);
    // Equal response times fall back to client id.
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return response[a] < response[b]; });
    std::vector<int> row(cfg.n_clients);
    for (std::size_t r = 0; r < order.size(); ++r) row[order[r]] = static_cast<int>(r + 1);
    ranks.push_back(std::move(row));
  }
  return ranks;
}

}  // namespace

std::vector<std::vector<int>> hedging_ranks(const HedgingConfig& cfg, Rotation rotation) {
  cfg.validate();
  return ranks_for(cfg, rotation, draw_latencies(cfg));
}

HedgingResult run_hedging(const HedgingConfig& cfg) {
  cfg.validate();
  const auto latencies = draw_latencies(cfg);
  return {rank_stats(ranks_for(cfg, Rotation::kNone, latencies)),
          rank_stats(ranks_for(cfg, cfg.hedging_rotation, latencies))};
}

void write_hedging_csv(std::ostream& out, const HedgingResult& result) {
  char buf[64];
  auto fmt = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return std::string(buf);
  };
  out << "policy,client_id,avg_rank\n";
  for (std::size_t c = 0; c < result.no_hedging.avg_rank.size(); ++c) {
    out << "no_hedging," << c << ',' << fmt(result.no_hedging.avg_rank[c]) << '\n';
  }
  for (std::size_t c = 0; c < result.hedging.avg_rank.size(); ++c) {
    out << "hedging," << c << ',' << fmt(result.hedging.avg_rank[c]) << '\n';
  }
  out << "policy,variance\n";
  out << "no_hedging," << fmt(result.no_hedging.variance) << '\n';
  out << "hedging," << fmt(result.hedging.variance) << '\n';
}

}  // namespace probseq
