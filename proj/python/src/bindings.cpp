#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "probseq/baseline.hpp"
#include "probseq/config.hpp"
#include "probseq/harness.hpp"
#include "probseq/metrics.hpp"
#include "probseq/online.hpp"
#include "probseq/pairwise.hpp"
#include "probseq/sequencer.hpp"

namespace py = pybind11;
using namespace probseq;

namespace {

using EventTuple = std::tuple<std::uint32_t, std::int64_t, std::uint64_t>;
using Batches = std::vector<std::vector<EventTuple>>;

std::vector<Event> to_events(const std::vector<EventTuple>& in) {
  std::vector<Event> out;
  out.reserve(in.size());
  for (const auto& [c, ts, seq] : in) out.push_back(Event{ClientId{c}, LocalTimestamp{ts}, seq, std::nullopt});
  return out;
}

std::vector<CorrectionDistribution> to_dists(const std::vector<std::vector<std::int64_t>>& samples) {
  std::vector<CorrectionDistribution> out;
  out.reserve(samples.size());
  for (std::size_t c = 0; c < samples.size(); ++c) {
    const std::size_t cap = std::max(samples[c].size(), CorrectionDistribution::kDefaultCapacity);
    out.emplace_back(ClientId{static_cast<std::uint32_t>(c)}, samples[c], cap);
  }
  return out;
}

Batches from_batches(const OrderedBatches& b) {
  Batches out;
  for (const auto& batch : b.batches) {
    auto& row = out.emplace_back();
    for (const auto& e : batch) row.emplace_back(e.client.value, e.ts.ticks, e.seq);
  }
  return out;
}

OrderedBatches to_batches(const Batches& in) {
  OrderedBatches out;
  for (const auto& b : in) out.batches.push_back(to_events(b));
  return out;
}

void check_clients(const std::vector<Event>& events, std::size_t clients) {
  for (const auto& e : events) {
    if (e.client.value >= clients) throw py::index_error("event from client without corrections: " + to_string(e.client));
  }
}

py::dict trial_dict(const TrialResult& t) {
  py::dict d;
  d["seed"] = t.seed;
  d["ras_tommy"] = t.ras_tommy;
  d["ras_baseline"] = t.ras_baseline;
  d["windowed_ras_tommy"] = t.windowed_ras_tommy;
  d["windowed_ras_baseline"] = t.windowed_ras_baseline;
  d["emit_delay_tommy_ns"] = t.emit_delay_tommy_ns;
  d["emit_delay_baseline_ns"] = t.emit_delay_baseline_ns;
  d["stable_horizon_ns"] = t.stable_horizon_ns;
  d["tommy_batches"] = t.tommy_batches;
  d["baseline_batches"] = t.baseline_batches;
  return d;
}

py::dict rank_dict(const RankStats& r) {
  py::dict d;
  d["avg_rank"] = r.avg_rank;
  d["variance"] = r.variance;
  return d;
}

}  // namespace

PYBIND11_MODULE(_probseq, m) {
  m.doc() = "Probabilistic fair event sequencing";
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<ProtocolError>(m, "ProtocolError", PyExc_RuntimeError);
  py::register_exception<TickOverflow>(m, "TickOverflow", PyExc_OverflowError);

  m.def(
      "pairwise_probability",
      [](std::int64_t x, std::int64_t y, const std::vector<std::int64_t>& cx, const std::vector<std::int64_t>& cy) {
        return pairwise_probability(LocalTimestamp{x}, LocalTimestamp{y}, cx, cy).value();
      },
      py::arg("x"), py::arg("y"), py::arg("cx"), py::arg("cy"),
      "Probability that the event stamped x on client X truly precedes the one stamped y on client Y.");

  py::class_<DifferenceTable>(m, "DifferenceTable")
      .def_property_readonly("clients", &DifferenceTable::clients)
      .def(
          "diffs",
          [](const DifferenceTable& t, std::uint32_t i, std::uint32_t j) { return t.at(ClientId{i}, ClientId{j}).diffs; },
          py::arg("i"), py::arg("j"))
      .def(
          "query",
          [](const DifferenceTable& t, const EventTuple& a, const EventTuple& b) {
            const auto ev = to_events({a, b});
            return pairwise_query(ev[0], ev[1], t.at(ev[0].client, ev[1].client)).value();
          },
          py::arg("a"), py::arg("b"))
      .def(
          "stable_time",
          [](const DifferenceTable& t, std::uint32_t frontier_client, std::uint32_t other, std::int64_t frontier_ts,
             double p) {
            return stable_time(t.at(ClientId{frontier_client}, ClientId{other}), LocalTimestamp{frontier_ts},
                               StabilityThreshold(p))
                .ticks;
          },
          py::arg("frontier_client"), py::arg("other"), py::arg("frontier_ts"), py::arg("p") = 0.999);

  m.def(
      "precompute_diffs",
      [](const std::vector<std::vector<std::int64_t>>& samples) { return precompute_diffs(to_dists(samples)); },
      py::arg("corrections"));

  m.def(
      "order_events",
      [](const std::vector<EventTuple>& events, const DifferenceTable& table, double threshold) {
        const auto ev = to_events(events);
        check_clients(ev, table.clients());
        return from_batches(order_events(ev, table, EdgeThreshold(threshold)));
      },
      py::arg("events"), py::arg("table"), py::arg("threshold") = 0.5);

  m.def(
      "baseline_order",
      [](const std::vector<EventTuple>& events, const std::vector<std::vector<std::int64_t>>& samples) {
        const auto ev = to_events(events);
        const auto dists = to_dists(samples);
        check_clients(ev, dists.size());
        return from_batches(baseline_order(ev, compute_bound(dists)));
      },
      py::arg("events"), py::arg("corrections"));

  m.def(
      "error_bound",
      [](const std::vector<std::vector<std::int64_t>>& samples) { return compute_bound(to_dists(samples)).bound_ns; },
      py::arg("corrections"));

  m.def(
      "ras",
      [](const Batches& batches, const std::vector<std::pair<std::uint32_t, std::uint64_t>>& truth) {
        GroundTruth g;
        for (const auto& [c, s] : truth) g.order.push_back(EventKey{ClientId{c}, s});
        const RasScore r = ras(to_batches(batches), g);
        py::dict d;
        d["value"] = r.value;
        d["correct"] = r.correct;
        d["incorrect"] = r.incorrect;
        d["unordered"] = r.unordered;
        return d;
      },
      py::arg("batches"), py::arg("truth"), "Truth is the true order as (client, seq) keys.");

  m.def(
      "rank_stats", [](const std::vector<std::vector<int>>& ranks) { return rank_dict(rank_stats(ranks)); },
      py::arg("ranks"));
  m.def("drift_bound", &drift_bound, py::arg("rho_ppm"), py::arg("window_ns"));
  m.def("offset_bound", &offset_bound, py::arg("uncertainty_ns"), py::arg("n"));

  m.def(
      "normalize_config", [](const std::string& text) { return config_to_json(parse_config(text)); },
      py::arg("config_json"), "Parse, validate and echo a JSON config with every default filled in.");

  m.def(
      "run_scenario",
      [](const std::string& text) {
        const FileConfig cfg = parse_config(text);
        RunResult r;
        {
          py::gil_scoped_release release;
          r = run_scenario(cfg.sim);
        }
        py::dict d;
        d["ras_tommy"] = r.ras_tommy;
        d["ras_baseline"] = r.ras_baseline;
        py::list trials;
        for (const auto& t : r.trials) trials.append(trial_dict(t));
        d["trials"] = trials;
        return d;
      },
      py::arg("config_json") = "{}");

  m.def(
      "run_hedging",
      [](const std::string& text) {
        const FileConfig cfg = parse_config(text);
        HedgingResult r;
        {
          py::gil_scoped_release release;
          r = run_hedging(cfg.hedging);
        }
        py::dict d;
        d["no_hedging"] = rank_dict(r.no_hedging);
        d["hedging"] = rank_dict(r.hedging);
        return d;
      },
      py::arg("config_json") = "{}");
}
