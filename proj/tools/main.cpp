#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <map>
#include <sstream>

#include "csv_util.hpp"
#include "probseq/config.hpp"

namespace fs = std::filesystem;
using namespace probseq;

namespace {

constexpr const char* kVersion = "0.1.0";

int verbosity = 0;

void log(int level, const std::string& msg) {
  if (verbosity >= level) std::cerr << msg << '\n';
}

FileConfig load_or_default(const std::string& path) {
  if (path.empty()) return {};
  if (!fs::exists(path)) throw ConfigError("config file not found: " + path);
  return load_config(path);
}

std::ofstream open_out(const fs::path& p) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  return out;
}

void write_manifest(const fs::path& dir, const std::string& subcommand, const FileConfig& cfg,
                    const std::vector<std::string>& outputs, const nlohmann::json& extra = nlohmann::json::object()) {
  nlohmann::json m;
  m["subcommand"] = subcommand;
  m["version"] = kVersion;
  m["seed"] = subcommand == "hedging" ? cfg.hedging.seed : cfg.sim.seed;
  m["config"] = nlohmann::json::parse(config_to_json(cfg));
  m["outputs"] = outputs;
  for (auto& [k, v] : extra.items()) m[k] = v;
  open_out(dir / "manifest.json") << m.dump(2) << '\n';
}

std::vector<std::string> split_values(const std::string& s) {
  std::vector<std::string> out;
  for (const auto& v : csv::split(s)) {
    auto t = csv::trim(v);
    if (!t.empty()) out.emplace_back(t);
  }
  return out;
}

// events CSV `client_id,local_ts_ns`; seq is the per-client line order.
std::vector<Event> read_events_csv(std::istream& in) {
  csv::Reader reader(in, {"client_id", "local_ts_ns"});
  std::vector<Event> events;
  std::map<std::uint32_t, std::uint64_t> next_seq;
  while (auto row = reader.next()) {
    const auto client = reader.get_int(*row, 0);
    if (client < 0 || client > std::numeric_limits<std::uint32_t>::max()) throw ConfigError("bad client_id");
    const auto c = static_cast<std::uint32_t>(client);
    events.push_back(Event{ClientId{c}, LocalTimestamp{reader.get_int(*row, 1)}, next_seq[c]++, std::nullopt});
  }
  return events;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Probabilistic fair event sequencing: simulations and ordering tool"};
  app.require_subcommand(1);
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir = "results";
  app.add_flag("-v,--verbose", verbosity, "Increase log verbosity");

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "JSON config file");
    sub->add_option("--seed", seed, "Root seed override");
    sub->add_option("--out", out_dir, "Output directory");
  };

  auto* run = app.add_subcommand("run", "Run one scenario (all trials) and score both sequencers");
  add_common(run);

  auto* sweep_cmd = app.add_subcommand("sweep", "Sweep one parameter");
  add_common(sweep_cmd);
  std::string experiment;
  std::string values;
  sweep_cmd->add_option("--experiment", experiment, "delay|threshold|clients|events|latency|fit|sync_interval|drift|stable|speedup")
      ->required();
  sweep_cmd->add_option("--values", values, "Comma-separated sweep values (default: built-in list)");

  auto* hedge = app.add_subcommand("hedging", "Rank variance with and without application hedging");
  add_common(hedge);

  auto* probes = app.add_subcommand("probes-export", "Export trial-0 correction samples");
  add_common(probes);

  auto* order = app.add_subcommand("order-file", "Order events from CSV files and print batches");
  std::string events_path, corrections_path;
  double threshold = 0.5;
  bool use_baseline = false;
  order->add_option("--events", events_path, "CSV client_id,local_ts_ns")->required();
  order->add_option("--corrections", corrections_path, "CSV client_id,probe_index,correction_ns")->required();
  order->add_option("--threshold", threshold, "Edge threshold in [0,1)");
  order->add_flag("--baseline", use_baseline, "Use the interval baseline instead");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (order->parsed()) {
      std::ifstream ev(events_path), co(corrections_path);
      if (!ev) throw ConfigError("cannot open events file: " + events_path);
      if (!co) throw ConfigError("cannot open corrections file: " + corrections_path);
      const auto events = read_events_csv(ev);
      const auto dists = read_corrections_csv(co);
      for (const auto& e : events) {
        if (e.client.value >= dists.size()) throw ConfigError("event from client without corrections: " + to_string(e.client));
      }
      const OrderedBatches batches = use_baseline ? baseline_order(events, compute_bound(dists))
                                                  : order_events(events, precompute_diffs(dists), EdgeThreshold(threshold));
      write_batches_csv(std::cout, batches);
      return 0;
    }

    FileConfig cfg = load_or_default(config_path);
    if (seed) {
      cfg.sim.seed = *seed;
      cfg.hedging.seed = *seed;
    }
    const fs::path dir = out_dir;
    fs::create_directories(dir);

    if (run->parsed()) {
      RunResult row;
      row.seed = cfg.sim.seed;
      row.param = "-";
      for (std::size_t t = 0; t < cfg.sim.trials; ++t) {
        log(1, "trial " + std::to_string(t));
        TrialRun tr = run_trial(cfg.sim, t);
        if (t == 0) {
          auto a = open_out(dir / "emissions_tommy.csv");
          write_emission_log_csv(a, tr.tommy_log);
          auto b = open_out(dir / "emissions_baseline.csv");
          write_emission_log_csv(b, tr.baseline_log);
        }
        row.trials.push_back(tr.result);
      }
      average_trials(row);
      auto res = open_out(dir / "results.csv");
      write_results_csv(res, {row});
      auto tri = open_out(dir / "trials.csv");
      write_trials_csv(tri, {row});
      write_manifest(dir, "run", cfg, {"results.csv", "trials.csv", "emissions_tommy.csv", "emissions_baseline.csv"});
    } else if (sweep_cmd->parsed()) {
      const Experiment exp = parse_experiment(experiment);
      const auto vals = values.empty() ? default_sweep_values(exp) : split_values(values);
      if (vals.empty()) throw ConfigError("no sweep values");
      log(1, "sweep " + experiment + " over " + std::to_string(vals.size()) + " values");
      const SweepOutput out = sweep(exp, cfg.sim, vals);
      const std::string base = "sweep_" + experiment;
      auto res = open_out(dir / (base + ".csv"));
      write_results_csv(res, out.rows);
      auto tri = open_out(dir / (base + "_trials.csv"));
      write_trials_csv(tri, out.rows);
      std::vector<std::string> outputs{base + ".csv", base + "_trials.csv"};
      if (!out.timings.empty()) {
        // Wall-clock data kept apart: it is the only non-reproducible output.
        auto tim = open_out(dir / (base + "_timings.csv"));
        write_timings_csv(tim, out.timings);
        outputs.push_back(base + "_timings.csv");
      }
      write_manifest(dir, "sweep", cfg, outputs, {{"experiment", experiment}, {"values", vals}});
    } else if (hedge->parsed()) {
      const HedgingResult r = run_hedging(cfg.hedging);
      auto h = open_out(dir / "hedging.csv");
      write_hedging_csv(h, r);
      write_manifest(dir, "hedging", cfg, {"hedging.csv"});
    } else if (probes->parsed()) {
      const PreparedTrial prep = prepare_trial(cfg.sim, 0);
      auto c = open_out(dir / "corrections.csv");
      write_corrections_csv(c, prep.corrections);
      write_manifest(dir, "probes-export", cfg, {"corrections.csv"});
    }
    log(1, "wrote " + dir.string());
    return 0;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
