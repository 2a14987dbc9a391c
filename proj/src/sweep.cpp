#include <algorithm>
#include <ctime>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <stdexcept>

#include "probseq/harness.hpp"
#include "probseq/rng.hpp"

namespace probseq {

namespace {

struct ExperimentName {
  Experiment experiment;
  std::string_view name;
};

constexpr ExperimentName kExperiments[] = {
    {Experiment::kDelay, "delay"},       {Experiment::kThreshold, "threshold"},
    {Experiment::kClients, "clients"},   {Experiment::kEvents, "events"},
    {Experiment::kLatency, "latency"},   {Experiment::kFit, "fit"},
    {Experiment::kSyncInterval, "sync_interval"}, {Experiment::kDrift, "drift"},
    {Experiment::kStable, "stable"},     {Experiment::kSpeedup, "speedup"},
};

constexpr std::size_t kTimingRepetitions = 3;

double parse_number(const std::string& text) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != text.size() || text.empty()) throw ConfigError("sweep value is not a number: " + text);
  return v;
}

std::size_t parse_count(const std::string& text) {
  const double v = parse_number(text);
  if (v < 1 || v != std::floor(v)) throw ConfigError("sweep value must be a positive integer: " + text);
  return static_cast<std::size_t>(v);
}

SimConfig apply(Experiment e, SimConfig cfg, const std::string& value) {
  switch (e) {
    case Experiment::kDelay:
      cfg.inter_event_delay_ns = ticks::round_nearest(parse_number(value));
      break;
    case Experiment::kThreshold:
      cfg.edge_threshold = parse_number(value);
      break;
    case Experiment::kClients:
      cfg.n_clients = parse_count(value);
      break;
    case Experiment::kEvents:
      cfg.n_events = parse_count(value);
      break;
    case Experiment::kLatency:
      cfg.sync_latency = latency_preset(value);
      cfg.message_latency.reset();
      break;
    case Experiment::kFit:
      if (cfg.sync_latency.kind != LatencyKind::kEmpirical) {
        cfg.sync_latency = LatencyModel::empirical(datacenter_like_trace(10'000, derive_seed(cfg.seed, "dc-trace")));
      }
      cfg.fit_kind = parse_latency_kind(value);
      break;
    case Experiment::kSyncInterval:
      cfg.sync_interval_ns = ticks::round_nearest(parse_number(value));
      break;
    case Experiment::kDrift:
    case Experiment::kStable:
      cfg.drift_sigma_ppm = parse_number(value);
      break;
    case Experiment::kSpeedup:
      cfg.n_clients = parse_count(value);
      cfg.n_events = 10 * cfg.n_clients;
      break;
  }
  cfg.validate();
  return cfg;
}

// Offline work counts for the two matrix routes: sample-pair comparisons vs
// binary-search probes.
std::pair<double, double> matrix_work(std::span<const Event> events, std::span<const CorrectionDistribution> dists) {
  double direct = 0.0, query = 0.0;
  for (const auto& a : events) {
    for (const auto& b : events) {
      if (&a == &b) continue;
      const double m = static_cast<double>(dists[a.client.value].size()) * dists[b.client.value].size();
      direct += m;
      query += std::ceil(std::log2(m + 1.0));
    }
  }
  return {direct, query};
}

// CPU time of the calling thread; time the hypervisor steals is not charged.
double thread_cpu_ns() {
  timespec ts{};
  clock_gettime(CLOCK_THREAD_CPUTIME_ID, &ts);
  return static_cast<double>(ts.tv_sec) * 1e9 + static_cast<double>(ts.tv_nsec);
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

void write_row(std::ostream& out, const std::string& experiment, const std::string& param, const std::string& trial,
               double ras_tommy, double ras_baseline, double aux1, double aux2, std::uint64_t seed) {
  out << experiment << ',' << param << ',' << trial << ',' << format_double(ras_tommy) << ','
      << format_double(ras_baseline) << ',' << format_double(aux1) << ',' << format_double(aux2) << ',' << seed
      << '\n';
}

}  // namespace

std::string_view to_string(Experiment e) {
  for (const auto& x : kExperiments) {
    if (x.experiment == e) return x.name;
  }
  return "unknown";
}

Experiment parse_experiment(std::string_view name) {
  for (const auto& x : kExperiments) {
    if (x.name == name) return x.experiment;
  }
  throw ConfigError("unknown experiment: " + std::string(name));
}

std::vector<std::string> default_sweep_values(Experiment e) {
  switch (e) {
    case Experiment::kDelay:
      return {"0", "1000", "2000", "5000", "10000", "20000", "50000", "100000", "200000", "500000"};
    case Experiment::kThreshold:
      return {"0.3", "0.4", "0.5", "0.6", "0.7"};
    case Experiment::kClients:
      return {"5", "10", "25"};
    case Experiment::kEvents:
      return {"25", "50", "100", "200", "250"};
    case Experiment::kLatency:
      return {"constant", "normal", "bimodal", "lognormal", "pareto", "datacenter"};
    case Experiment::kFit:
      return {"empirical", "normal", "bimodal", "pareto"};
    case Experiment::kSyncInterval:
      return {"10000000", "50000000", "100000000", "500000000", "1000000000"};
    case Experiment::kDrift:
    case Experiment::kStable:
      return {"0", "20", "50", "100"};
    case Experiment::kSpeedup:
      return {"5", "10", "20"};
  }
  return {};
}

std::vector<std::int64_t> datacenter_like_trace(std::size_t n, std::uint64_t seed) {
  // Two queueing modes plus a heavy tail.
  Rng rng = make_rng(seed, "datacenter-trace");
  const LatencyModel fast = LatencyModel::normal(25'000.0, 3'000.0);
  const LatencyModel queued = LatencyModel::normal(60'000.0, 8'000.0);
  const LatencyModel tail = LatencyModel::pareto(40'000.0, 15'000.0, 1.8);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<std::int64_t> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double r = u(rng);
    const LatencyModel& m = r < 0.6 ? fast : (r < 0.92 ? queued : tail);
    out.push_back(sample_latency(m, rng));
  }
  return out;
}

LatencyModel latency_preset(std::string_view name) {
  if (name == "constant") return LatencyModel::constant(50'000);
  if (name == "normal") return LatencyModel::normal(50'000.0, 10'000.0);
  if (name == "bimodal") return LatencyModel::bimodal(0.7, 40'000.0, 5'000.0, 80'000.0, 10'000.0);
  if (name == "lognormal") return LatencyModel::lognormal(30'000.0, std::log(15'000.0), 0.5);
  if (name == "pareto") return LatencyModel::pareto(30'000.0, 10'000.0, 2.5);
  if (name == "datacenter") return LatencyModel::empirical(datacenter_like_trace(10'000, hash_label("datacenter")));
  throw ConfigError("unknown latency preset: " + std::string(name));
}

SpeedupTiming measure_matrix_speedup(std::span<const Event> events, std::span<const CorrectionDistribution> dists,
                                     std::size_t repetitions) {
  SpeedupTiming t;
  double best_direct = INFINITY, best_pre = INFINITY;
  double sink = 0.0;
  for (std::size_t r = 0; r < std::max<std::size_t>(1, repetitions); ++r) {
    const double t0 = thread_cpu_ns();
    const ProbMatrix direct = build_prob_matrix_direct(events, dists);
    const double t1 = thread_cpu_ns();
    const DifferenceTable table = precompute_diffs(dists);
    const ProbMatrix fast = build_prob_matrix(events, table);
    const double t2 = thread_cpu_ns();
    if (direct.size() > 1) sink += direct(0, 1) + fast(0, 1);
    best_direct = std::min(best_direct, t1 - t0);
    best_pre = std::min(best_pre, t2 - t1);
  }
  // Keep the matrices observable so neither build can be elided.
  if (std::isnan(sink)) throw std::logic_error("matrix contains NaN");
  t.direct_ns = best_direct;
  t.precomputed_ns = best_pre;
  t.speedup = best_pre > 0.0 ? best_direct / best_pre : 0.0;
  return t;
}

SweepOutput sweep(Experiment experiment, const SimConfig& base, const std::vector<std::string>& values) {
  base.validate();
  SweepOutput out;
  std::vector<double> zero_drift_horizon;
  if (experiment == Experiment::kStable) {
    const SimConfig ref = apply(experiment, base, "0");
    for (std::size_t t = 0; t < ref.trials; ++t) zero_drift_horizon.push_back(run_trial(ref, t).result.stable_horizon_ns);
  }

  for (const auto& value : values) {
    const SimConfig cfg = apply(experiment, base, value);
    RunResult row;
    row.experiment = std::string(to_string(experiment));
    row.param = value;
    row.seed = cfg.seed;

    if (experiment == Experiment::kSpeedup) {
      // Same workload size every trial, so the fastest run is the least disturbed one.
      SpeedupTiming timing{value, INFINITY, INFINITY, 0.0};
      for (std::size_t t = 0; t < cfg.trials; ++t) {
        const PreparedTrial prep = prepare_trial(cfg, t);
        std::vector<Event> events = prep.events;
        for (auto& e : events) e.true_time.reset();
        GroundTruth truth;
        for (const auto& e : prep.events) truth.order.push_back(e.key());
        const DifferenceTable diffs = precompute_diffs(prep.corrections);

        TrialResult tr;
        tr.seed = prep.seed;
        tr.ras_tommy = ras(order_events(events, diffs, EdgeThreshold(cfg.edge_threshold)), truth).value;
        tr.ras_baseline = ras(baseline_order(events, compute_bound(prep.corrections)), truth).value;
        std::tie(tr.aux1, tr.aux2) = matrix_work(events, prep.corrections);
        row.trials.push_back(tr);

        const auto m = measure_matrix_speedup(events, prep.corrections, kTimingRepetitions);
        timing.direct_ns = std::min(timing.direct_ns, m.direct_ns);
        timing.precomputed_ns = std::min(timing.precomputed_ns, m.precomputed_ns);
      }
      timing.speedup = timing.precomputed_ns > 0 ? timing.direct_ns / timing.precomputed_ns : 0.0;
      out.timings.push_back(timing);
    } else {
      for (std::size_t t = 0; t < cfg.trials; ++t) {
        TrialResult tr = run_trial(cfg, t).result;
        switch (experiment) {
          case Experiment::kEvents:
            tr.aux1 = tr.windowed_ras_tommy;
            tr.aux2 = tr.windowed_ras_baseline;
            break;
          case Experiment::kStable:
            tr.aux1 = tr.stable_horizon_ns;
            tr.aux2 = tr.stable_horizon_ns - zero_drift_horizon.at(t);
            break;
          default:
            break;
        }
        row.trials.push_back(tr);
      }
    }
    average_trials(row);
    out.rows.push_back(std::move(row));
  }
  return out;
}

void write_results_csv(std::ostream& out, const std::vector<RunResult>& rows) {
  out << "experiment,param,trial,ras_tommy,ras_baseline,aux1,aux2,seed\n";
  for (const auto& r : rows) {
    write_row(out, r.experiment, r.param, "mean", r.ras_tommy, r.ras_baseline, r.aux1, r.aux2, r.seed);
  }
}

void write_trials_csv(std::ostream& out, const std::vector<RunResult>& rows) {
  out << "experiment,param,trial,ras_tommy,ras_baseline,aux1,aux2,seed\n";
  for (const auto& r : rows) {
    for (std::size_t t = 0; t < r.trials.size(); ++t) {
      const auto& tr = r.trials[t];
      write_row(out, r.experiment, r.param, std::to_string(t), tr.ras_tommy, tr.ras_baseline, tr.aux1, tr.aux2,
                tr.seed);
    }
  }
}

void write_timings_csv(std::ostream& out, const std::vector<SpeedupTiming>& timings) {
  out << "param,direct_ns,precomputed_ns,speedup\n";
  for (const auto& t : timings) {
    out << t.param << ',' << format_double(t.direct_ns) << ',' << format_double(t.precomputed_ns) << ','
        << format_double(t.speedup) << '\n';
  }
}

}  // namespace probseq
