#include "probseq/harness.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <queue>
#include <stdexcept>

#include "probseq/baseline.hpp"
#include "probseq/rng.hpp"

namespace probseq {

void SimConfig::validate() const {
  if (n_clients == 0) throw ConfigError("n_clients must be positive");
  if (n_events == 0) throw ConfigError("n_events must be positive");
  if (inter_event_delay_ns < 0) throw ConfigError("inter_event_delay_ns must be non-negative");
  if (!(offset_sigma_ns >= 0.0)) throw ConfigError("offset_sigma_ns must be non-negative");
  if (!(drift_sigma_ppm >= 0.0)) throw ConfigError("drift_sigma_ppm must be non-negative");
  if (sync_interval_ns <= 0) throw ConfigError("sync_interval_ns must be positive");
  if (sync_samples == 0) throw ConfigError("sync_samples must be positive");
  if (capacity == 0) throw ConfigError("capacity must be positive");
  if (!(message_latency_scale >= 0.0)) throw ConfigError("message_latency_scale must be non-negative");
  if (!(edge_threshold >= 0.0 && edge_threshold < 1.0)) throw ConfigError("edge_threshold must lie in [0,1)");
  if (!(p_stable > 0.5 && p_stable <= 1.0)) throw ConfigError("p_stable must lie in (0.5,1]");
  if (heartbeat_interval_ns <= 0) throw ConfigError("heartbeat_interval_ns must be positive");
  if (trials == 0) throw ConfigError("trials must be at least 1");
  if (ras_window < 2) throw ConfigError("ras_window must be at least 2");
  sync_latency.validate();
  if (message_latency) message_latency->validate();
}

std::uint64_t trial_seed(std::uint64_t root, std::size_t trial) { return derive_seed(root, "trial", trial); }

namespace {

constexpr std::size_t kReferenceTraceSize = 10'000;
// Continuing synchronization is simulated this far past the last event.
constexpr std::int64_t kContinuationSlackNs = 2'000'000'000;
// A trial that has not emitted every event this long after the last one is
// treated as a simulator failure.
constexpr std::int64_t kDrainLimitNs = 10'000'000'000;

LatencyModel effective_sync_latency(const SimConfig& cfg, std::uint64_t seed) {
  if (!cfg.fit_kind) return cfg.sync_latency;
  std::vector<std::int64_t> reference;
  if (cfg.sync_latency.kind == LatencyKind::kEmpirical) {
    reference = cfg.sync_latency.trace;
  } else {
    Rng rng = make_rng(seed, "latency-reference");
    reference.reserve(kReferenceTraceSize);
    for (std::size_t i = 0; i < kReferenceTraceSize; ++i) reference.push_back(sample_latency(cfg.sync_latency, rng));
  }
  return fit_distribution(*cfg.fit_kind, reference);
}

VirtualClock clock_at(const VirtualClock& base, const std::vector<ClockStep>& steps, SimTime t) {
  const auto it = std::upper_bound(steps.begin(), steps.end(), t,
                                   [](SimTime v, const ClockStep& s) { return v < s.at; });
  return it == steps.begin() ? base : std::prev(it)->clock;
}

double stable_horizon(const DifferenceTable& diffs, StabilityThreshold p) {
  double total = 0.0;
  for (std::uint32_t x = 0; x < diffs.clients(); ++x) {
    const auto st = stable_times(LocalTimestamp{0}, ClientId{x}, diffs, p);
    total += static_cast<double>(std::max_element(st.begin(), st.end())->ticks);
  }
  return total / static_cast<double>(diffs.clients());
}

struct Message {
  bool is_event = false;
  Event event;
  Heartbeat heartbeat;
};

enum class ActionKind { kGenerateEvent, kGenerateHeartbeat, kDeliver };

struct Action {
  SimTime at;
  std::uint32_t client = 0;
  std::uint64_t order = 0;
  ActionKind kind = ActionKind::kDeliver;
  std::size_t payload = 0;
};

struct ActionLater {
  bool operator()(const Action& a, const Action& b) const {
    if (a.at != b.at) return a.at > b.at;
    if (a.client != b.client) return a.client > b.client;
    return a.order > b.order;
  }
};

}  // namespace

PreparedTrial prepare_trial(const SimConfig& cfg, std::size_t trial) {
  cfg.validate();
  PreparedTrial out;
  out.seed = trial_seed(cfg.seed, trial);
  const std::size_t n = cfg.n_clients;
  const LatencyModel probe_latency = effective_sync_latency(cfg, out.seed);
  const VirtualClock server{};

  const std::int64_t interval = cfg.sync_interval_ns;
  const auto warmup = static_cast<std::int64_t>(cfg.warmup_probes);
  const auto samples = static_cast<std::int64_t>(cfg.sync_samples);
  out.event_phase_start = SimTime{ticks::mul(warmup + samples + 1, interval)};
  const std::int64_t event_span = ticks::mul(static_cast<std::int64_t>(cfg.n_events), cfg.inter_event_delay_ns);

  out.initial_clocks.reserve(n);
  out.corrections.reserve(n);
  out.clock_steps.resize(n);
  std::vector<VirtualClock> event_clocks;
  for (std::size_t c = 0; c < n; ++c) {
    const ClientId id{static_cast<std::uint32_t>(c)};
    Rng params = make_rng(out.seed, "clock-params", c);
    std::normal_distribution<double> z(0.0, 1.0);
    std::uniform_int_distribution<std::int64_t> phase_dist(0, interval - 1);
    const double z_offset = z(params);
    const double z_drift = z(params);
    const std::int64_t phase = phase_dist(params);

    VirtualClock clock{ticks::round_nearest(z_offset * cfg.offset_sigma_ns), z_drift * cfg.drift_sigma_ppm, SimTime{0}};
    out.initial_clocks.push_back(clock);

    SyncParams sp;
    sp.interval_ns = interval;
    sp.capacity = cfg.capacity;
    sp.start = SimTime{phase};
    sp.duration_ns = ticks::mul(warmup, interval);
    auto warm = run_sync(id, clock, server, probe_latency, sp, derive_seed(out.seed, "sync-warmup", c));

    sp.start = SimTime{ticks::add(phase, sp.duration_ns)};
    sp.duration_ns = ticks::mul(samples, interval);
    auto collect = run_sync(id, warm.clock, server, probe_latency, sp, derive_seed(out.seed, "sync-collect", c));
    out.corrections.push_back(std::move(collect.corrections));

    sp.start = SimTime{ticks::add(sp.start.ticks, sp.duration_ns)};
    sp.duration_ns = ticks::add(ticks::sub(out.event_phase_start.ticks, sp.start.ticks),
                                ticks::add(event_span, kContinuationSlackNs));
    auto cont = run_sync(id, collect.clock, server, probe_latency, sp, derive_seed(out.seed, "sync-continue", c));
    event_clocks.push_back(collect.clock);
    out.clock_steps[c] = std::move(cont.steps);
  }

  std::vector<EventStream> streams;
  streams.reserve(n);
  for (std::size_t c = 0; c < n; ++c) streams.emplace_back(ClientId{static_cast<std::uint32_t>(c)});
  out.events.reserve(cfg.n_events);
  for (std::size_t k = 0; k < cfg.n_events; ++k) {
    const std::size_t c = k % n;
    const SimTime at{ticks::add(out.event_phase_start.ticks,
                                ticks::mul(static_cast<std::int64_t>(k), cfg.inter_event_delay_ns))};
    const auto clock = clock_at(event_clocks[c], out.clock_steps[c], at);
    out.events.push_back(streams[c].next(clock_read(clock, at), at));
  }
  // Keep the collection-end clocks reachable for the heartbeat path.
  for (std::size_t c = 0; c < n; ++c) {
    out.clock_steps[c].insert(out.clock_steps[c].begin(), ClockStep{SimTime{0}, event_clocks[c]});
  }
  return out;
}

TrialRun run_trial(const SimConfig& cfg, std::size_t trial) {
  PreparedTrial prep = prepare_trial(cfg, trial);
  const std::size_t n = cfg.n_clients;

  TrialRun run;
  run.result.seed = prep.seed;
  for (const auto& e : prep.events) run.truth.order.push_back(e.key());

  const DifferenceTable diffs = precompute_diffs(prep.corrections, prep.event_phase_start);
  const StabilityThreshold p_stable(cfg.p_stable);
  ProbabilisticPolicy tommy_policy(diffs, EdgeThreshold(cfg.edge_threshold), p_stable);
  const ErrorBound pooled = compute_bound(prep.corrections);
  std::unique_ptr<IntervalPolicy> baseline_policy =
      cfg.baseline_per_client_bounds
          ? std::make_unique<IntervalPolicy>(compute_bounds_per_client(prep.corrections))
          : std::make_unique<IntervalPolicy>(n, pooled);
  run.result.baseline_bound_ns = pooled.bound_ns;
  run.result.stable_horizon_ns = stable_horizon(diffs, p_stable);

  OnlineOptions options;
  if (cfg.exclusion_timeout_intervals > 0) {
    options.exclusion_timeout_ns =
        ticks::mul(static_cast<std::int64_t>(cfg.exclusion_timeout_intervals), cfg.heartbeat_interval_ns);
  }
  OnlineSequencer tommy(tommy_policy, options, prep.event_phase_start);
  OnlineSequencer baseline(*baseline_policy, options, prep.event_phase_start);

  const LatencyModel message_latency = cfg.message_latency.value_or(cfg.sync_latency);
  std::vector<Rng> net;
  std::vector<EventStream> stamps;
  std::vector<SimTime> channel_tail(n, SimTime{0});
  net.reserve(n);
  stamps.reserve(n);
  std::priority_queue<Action, std::vector<Action>, ActionLater> queue;
  std::uint64_t order = 0;

  for (std::size_t c = 0; c < n; ++c) {
    net.push_back(make_rng(prep.seed, "message-net", c));
    stamps.emplace_back(ClientId{static_cast<std::uint32_t>(c)});
    Rng hb = make_rng(prep.seed, "heartbeat-phase", c);
    std::uniform_int_distribution<std::int64_t> phase(0, cfg.heartbeat_interval_ns - 1);
    queue.push({SimTime{prep.event_phase_start.ticks + phase(hb)}, static_cast<std::uint32_t>(c), order++,
                ActionKind::kGenerateHeartbeat, 0});
  }
  if (!prep.events.empty()) {
    queue.push({*prep.events[0].true_time, prep.events[0].client.value, order++, ActionKind::kGenerateEvent, 0});
  }

  std::vector<Message> messages;
  const SimTime give_up{ticks::add(prep.events.back().true_time->ticks, kDrainLimitNs)};
  auto send = [&](std::size_t c, SimTime now, Message msg) {
    const double raw = static_cast<double>(sample_latency(message_latency, net[c]));
    const SimTime arrive{std::max(ticks::add(now.ticks, ticks::round_nearest(raw * cfg.message_latency_scale)),
                                  channel_tail[c].ticks)};
    channel_tail[c] = arrive;
    messages.push_back(std::move(msg));
    queue.push({arrive, static_cast<std::uint32_t>(c), order++, ActionKind::kDeliver, messages.size() - 1});
  };

  std::map<EventKey, SimTime> generated_at;
  for (const auto& e : prep.events) generated_at[e.key()] = *e.true_time;

  while (tommy.emission_log().size() < cfg.n_events || baseline.emission_log().size() < cfg.n_events) {
    if (queue.empty()) throw std::logic_error("simulation queue drained before all events were emitted");
    const Action a = queue.top();
    queue.pop();
    if (a.at > give_up) throw std::runtime_error("simulation did not emit every event within the drain limit");

    switch (a.kind) {
      case ActionKind::kGenerateEvent: {
        const Event& e = prep.events[a.payload];
        Message msg;
        msg.is_event = true;
        msg.event = e;
        // The library path only ever sees local information.
        msg.event.true_time.reset();
        msg.event.ts = stamps[a.client].stamp(e.ts);
        send(a.client, a.at, std::move(msg));
        const std::size_t next = a.payload + 1;
        if (next < prep.events.size()) {
          queue.push({*prep.events[next].true_time, prep.events[next].client.value, order++,
                      ActionKind::kGenerateEvent, next});
        }
        break;
      }
      case ActionKind::kGenerateHeartbeat: {
        const auto clock = clock_at(prep.initial_clocks[a.client], prep.clock_steps[a.client], a.at);
        Message msg;
        msg.heartbeat = Heartbeat{ClientId{a.client}, stamps[a.client].stamp(clock_read(clock, a.at))};
        send(a.client, a.at, std::move(msg));
        queue.push({SimTime{ticks::add(a.at.ticks, cfg.heartbeat_interval_ns)}, a.client, order++,
                    ActionKind::kGenerateHeartbeat, 0});
        break;
      }
      case ActionKind::kDeliver: {
        const Message& msg = messages[a.payload];
        if (msg.is_event) {
          run.tommy.append(tommy.on_event_arrival(msg.event, a.at));
          run.baseline.append(baseline.on_event_arrival(msg.event, a.at));
        } else {
          run.tommy.append(tommy.on_heartbeat(msg.heartbeat, a.at));
          run.baseline.append(baseline.on_heartbeat(msg.heartbeat, a.at));
        }
        break;
      }
    }
  }

  run.tommy_log = tommy.emission_log();
  run.baseline_log = baseline.emission_log();

  auto mean_delay = [&](const std::vector<EmittedEvent>& log) {
    double total = 0.0;
    for (const auto& r : log) total += static_cast<double>(r.emitted_at.ticks - generated_at.at(r.event.key()).ticks);
    return log.empty() ? 0.0 : total / static_cast<double>(log.size());
  };

  auto& r = run.result;
  r.ras_tommy = ras(run.tommy, run.truth).value;
  r.ras_baseline = ras(run.baseline, run.truth).value;
  if (cfg.n_events >= cfg.ras_window) {
    r.windowed_ras_tommy = windowed_ras(run.tommy, run.truth, cfg.ras_window);
    r.windowed_ras_baseline = windowed_ras(run.baseline, run.truth, cfg.ras_window);
  } else {
    r.windowed_ras_tommy = r.windowed_ras_baseline = std::nan("");
  }
  r.emit_delay_tommy_ns = mean_delay(run.tommy_log);
  r.emit_delay_baseline_ns = mean_delay(run.baseline_log);
  r.tommy_batches = run.tommy.batches.size();
  r.baseline_batches = run.baseline.batches.size();
  r.aux1 = r.emit_delay_tommy_ns;
  r.aux2 = r.emit_delay_baseline_ns;
  return run;
}

RunResult run_scenario(const SimConfig& cfg) {
  cfg.validate();
  RunResult out;
  out.seed = cfg.seed;
  for (std::size_t t = 0; t < cfg.trials; ++t) out.trials.push_back(run_trial(cfg, t).result);
  average_trials(out);
  return out;
}

void average_trials(RunResult& row) {
  row.ras_tommy = row.ras_baseline = row.aux1 = row.aux2 = 0.0;
  const double k = static_cast<double>(row.trials.size());
  for (const auto& t : row.trials) {
    row.ras_tommy += t.ras_tommy / k;
    row.ras_baseline += t.ras_baseline / k;
    row.aux1 += t.aux1 / k;
    row.aux2 += t.aux2 / k;
  }
}

}  // namespace probseq
