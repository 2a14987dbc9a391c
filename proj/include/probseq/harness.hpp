#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "probseq/metrics.hpp"
#include "probseq/online.hpp"
#include "probseq/sequencer.hpp"
#include "probseq/syncsim.hpp"

namespace probseq {

/// One simulated experiment. Defaults are the desk-scale configuration.
struct SimConfig {
  std::size_t n_clients = 25;
  std::size_t n_events = 100;
  std::int64_t inter_event_delay_ns = 10'000;

  /// Initial clock offsets ~ N(0, offset_sigma); drift rates ~ N(0, drift_sigma).
  double offset_sigma_ns = 1e9;
  double drift_sigma_ppm = 10.0;

  std::int64_t sync_interval_ns = 100'000'000;
  /// Probes run before collection starts; their adjustments are discarded.
  std::size_t warmup_probes = 10;
  /// Probes whose adjustments form each client's correction distribution.
  std::size_t sync_samples = 100;
  std::size_t capacity = CorrectionDistribution::kDefaultCapacity;

  LatencyModel sync_latency = LatencyModel::normal(50'000.0, 10'000.0);
  /// Latency of event and heartbeat messages; falls back to sync_latency.
  std::optional<LatencyModel> message_latency;
  double message_latency_scale = 1.0;
  /// When set, a reference trace drawn from sync_latency is refitted with
  /// this kind and the fitted model drives the probes.
  std::optional<LatencyKind> fit_kind;

  double edge_threshold = 0.5;
  double p_stable = 0.999;
  std::int64_t heartbeat_interval_ns = 20'000;
  std::size_t exclusion_timeout_intervals = 10;
  bool baseline_per_client_bounds = false;

  std::size_t trials = 3;
  std::uint64_t seed = 1;
  std::size_t ras_window = 25;

  /// Throws ConfigError on invalid values.
  void validate() const;
};

struct TrialResult {
  std::uint64_t seed = 0;
  double ras_tommy = 0.0;
  double ras_baseline = 0.0;
  double windowed_ras_tommy = 0.0;
  double windowed_ras_baseline = 0.0;
  /// Mean time from generation to emission, ns.
  double emit_delay_tommy_ns = 0.0;
  double emit_delay_baseline_ns = 0.0;
  /// Mean over frontier clients of the furthest stable time past the frontier.
  double stable_horizon_ns = 0.0;
  std::int64_t baseline_bound_ns = 0;
  std::size_t tommy_batches = 0;
  std::size_t baseline_batches = 0;
  /// Experiment-specific columns (see sweep()).
  double aux1 = 0.0;
  double aux2 = 0.0;
};

struct RunResult {
  std::string experiment = "run";
  std::string param;
  std::uint64_t seed = 0;
  double ras_tommy = 0.0;
  double ras_baseline = 0.0;
  double aux1 = 0.0;
  double aux2 = 0.0;
  std::vector<TrialResult> trials;
};

/// Clock state and inputs of one trial, before any ordering happens.
struct PreparedTrial {
  std::uint64_t seed = 0;
  std::vector<VirtualClock> initial_clocks;
  std::vector<CorrectionDistribution> corrections;
  std::vector<std::vector<ClockStep>> clock_steps;  // continuing sync during the event phase
  std::vector<Event> events;                        // generation order; true_time populated
  SimTime event_phase_start{};
};

std::uint64_t trial_seed(std::uint64_t root, std::size_t trial);

PreparedTrial prepare_trial(const SimConfig& cfg, std::size_t trial);

/// Full online simulation of one trial, both sequencers fed the same stream.
struct TrialRun {
  TrialResult result;
  OrderedBatches tommy;
  OrderedBatches baseline;
  std::vector<EmittedEvent> tommy_log;
  std::vector<EmittedEvent> baseline_log;
  GroundTruth truth;
};

TrialRun run_trial(const SimConfig& cfg, std::size_t trial);

/// Averages `cfg.trials` trials.
RunResult run_scenario(const SimConfig& cfg);

/// Recomputes the mean columns of `row` from row.trials.
void average_trials(RunResult& row);

enum class Experiment {
  kDelay,
  kThreshold,
  kClients,
  kEvents,
  kLatency,
  kFit,
  kSyncInterval,
  kDrift,
  kStable,
  kSpeedup,
};

std::string_view to_string(Experiment e);
Experiment parse_experiment(std::string_view name);

/// Sweep values as text; numeric for most experiments, model names for the
/// latency and fit experiments.
std::vector<std::string> default_sweep_values(Experiment e);

/// Fastest observed direct and precomputed matrix builds over all trials and repetitions.
struct SpeedupTiming {
  std::string param;
  double direct_ns = 0.0;
  double precomputed_ns = 0.0;
  double speedup = 0.0;
};

struct SweepOutput {
  std::vector<RunResult> rows;
  /// Wall-clock measurements (speedup experiment only); not reproducible.
  std::vector<SpeedupTiming> timings;
};

SweepOutput sweep(Experiment experiment, const SimConfig& cfg, const std::vector<std::string>& values);

/// Timing of full matrix construction: direct enumeration vs precompute plus
/// binary-search queries, best of `repetitions`.
SpeedupTiming measure_matrix_speedup(std::span<const Event> events, std::span<const CorrectionDistribution> dists,
                                     std::size_t repetitions);

/// Synthetic multi-modal, long-tailed latency trace (ns).
std::vector<std::int64_t> datacenter_like_trace(std::size_t n, std::uint64_t seed);
/// Named latency presets used by the latency-model sweep.
LatencyModel latency_preset(std::string_view name);

enum class Rotation { kNone, kRoundRobin };

struct HedgingConfig {
  std::size_t n_clients = 10;
  std::size_t n_machines = 10;
  /// Machine i (1-based) has latency ~ N(i * mean_step, sigma).
  double mean_step_ns = 1'000.0;
  double sigma_ns = 10'000.0;
  std::size_t trials = 1000;
  std::uint64_t seed = 1;
  Rotation hedging_rotation = Rotation::kRoundRobin;

  void validate() const;
};

struct HedgingResult {
  RankStats no_hedging;
  RankStats hedging;
};

/// Per-trial ranks for one placement policy. Both policies in run_hedging
/// see the same latency draws.
std::vector<std::vector<int>> hedging_ranks(const HedgingConfig& cfg, Rotation rotation);
HedgingResult run_hedging(const HedgingConfig& cfg);

/// CSV `experiment,param,trial,ras_tommy,ras_baseline,aux1,aux2,seed`; one
/// row per sweep value with trial = "mean".
void write_results_csv(std::ostream& out, const std::vector<RunResult>& rows);
/// Same schema, one row per individual trial.
void write_trials_csv(std::ostream& out, const std::vector<RunResult>& rows);
void write_timings_csv(std::ostream& out, const std::vector<SpeedupTiming>& timings);
/// `policy,client_id,avg_rank` rows, then `policy,variance` summary rows.
void write_hedging_csv(std::ostream& out, const HedgingResult& result);

}  // namespace probseq
