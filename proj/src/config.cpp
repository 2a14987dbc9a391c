#include "probseq/config.hpp"

#include <fstream>
#include <json.hpp>
#include <set>
#include <sstream>

namespace probseq {

namespace {

using nlohmann::json;

void reject_unknown(const json& obj, const std::set<std::string>& known, const std::string& where) {
  if (!obj.is_object()) throw ConfigError(where + " must be a JSON object");
  for (const auto& [key, _] : obj.items()) {
    if (!known.count(key)) throw ConfigError("unknown key '" + key + "' in " + where);
  }
}

template <typename T>
void read(const json& obj, const char* key, T& out, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end()) return;
  try {
    out = it->get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(where + "." + key + ": " + e.what());
  }
}

LatencyModel latency_from_json(const json& j, const std::filesystem::path& base, const std::string& where) {
  if (j.is_string()) return latency_preset(j.get<std::string>());
  reject_unknown(j,
                 {"kind", "value", "mean", "sigma", "weight", "mean2", "sigma2", "scale", "shape", "shift", "trace",
                  "trace_path"},
                 where);
  LatencyModel m;
  std::string kind = "constant";
  read(j, "kind", kind, where);
  m.kind = parse_latency_kind(kind);
  read(j, "value", m.value, where);
  read(j, "mean", m.mean, where);
  read(j, "sigma", m.sigma, where);
  read(j, "weight", m.weight, where);
  read(j, "mean2", m.mean2, where);
  read(j, "sigma2", m.sigma2, where);
  read(j, "scale", m.scale, where);
  read(j, "shape", m.shape, where);
  read(j, "shift", m.shift, where);
  read(j, "trace", m.trace, where);
  if (auto it = j.find("trace_path"); it != j.end()) {
    std::filesystem::path p = it->get<std::string>();
    if (p.is_relative() && !base.empty()) p = base / p;
    auto more = read_latency_trace(p);
    m.trace.insert(m.trace.end(), more.begin(), more.end());
  }
  m.validate();
  return m;
}

json latency_to_json(const LatencyModel& m) {
  json j{{"kind", std::string(to_string(m.kind))}};
  switch (m.kind) {
    case LatencyKind::kConstant:
      j["value"] = m.value;
      break;
    case LatencyKind::kEmpirical:
      j["trace"] = m.trace;
      break;
    case LatencyKind::kNormal:
      j["mean"] = m.mean;
      j["sigma"] = m.sigma;
      break;
    case LatencyKind::kBimodal:
      j["weight"] = m.weight;
      j["mean"] = m.mean;
      j["sigma"] = m.sigma;
      j["mean2"] = m.mean2;
      j["sigma2"] = m.sigma2;
      break;
    case LatencyKind::kPareto:
      j["shift"] = m.shift;
      j["scale"] = m.scale;
      j["shape"] = m.shape;
      break;
    case LatencyKind::kLognormal:
      j["shift"] = m.shift;
      j["mean"] = m.mean;
      j["sigma"] = m.sigma;
      break;
  }
  return j;
}

Rotation parse_rotation(const std::string& s) {
  if (s == "none") return Rotation::kNone;
  if (s == "round-robin") return Rotation::kRoundRobin;
  throw ConfigError("unknown rotation: " + s);
}

HedgingConfig hedging_from_json(const json& j) {
  const std::string where = "hedging";
  reject_unknown(j, {"n_clients", "n_machines", "mean_step_ns", "sigma_ns", "trials", "seed", "rotation"}, where);
  HedgingConfig h;
  read(j, "n_clients", h.n_clients, where);
  read(j, "n_machines", h.n_machines, where);
  read(j, "mean_step_ns", h.mean_step_ns, where);
  read(j, "sigma_ns", h.sigma_ns, where);
  read(j, "trials", h.trials, where);
  read(j, "seed", h.seed, where);
  std::string rot = "round-robin";
  read(j, "rotation", rot, where);
  h.hedging_rotation = parse_rotation(rot);
  h.validate();
  return h;
}

}  // namespace

FileConfig parse_config(const std::string& text, const std::filesystem::path& base_dir) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  const std::string where = "config";
  reject_unknown(j,
                 {"n_clients", "n_events", "inter_event_delay_ns", "offset_sigma_ns", "drift_sigma_ppm",
                  "sync_interval_ns", "warmup_probes", "sync_samples", "capacity", "sync_latency", "message_latency",
                  "message_latency_scale", "fit_kind", "edge_threshold", "p_stable", "heartbeat_interval_ns",
                  "exclusion_timeout_intervals", "baseline_per_client_bounds", "trials", "seed", "ras_window",
                  "hedging"},
                 where);
  FileConfig out;
  SimConfig& c = out.sim;
  read(j, "n_clients", c.n_clients, where);
  read(j, "n_events", c.n_events, where);
  read(j, "inter_event_delay_ns", c.inter_event_delay_ns, where);
  read(j, "offset_sigma_ns", c.offset_sigma_ns, where);
  read(j, "drift_sigma_ppm", c.drift_sigma_ppm, where);
  read(j, "sync_interval_ns", c.sync_interval_ns, where);
  read(j, "warmup_probes", c.warmup_probes, where);
  read(j, "sync_samples", c.sync_samples, where);
  read(j, "capacity", c.capacity, where);
  if (j.contains("sync_latency")) c.sync_latency = latency_from_json(j["sync_latency"], base_dir, "sync_latency");
  if (j.contains("message_latency") && !j["message_latency"].is_null()) {
    c.message_latency = latency_from_json(j["message_latency"], base_dir, "message_latency");
  }
  read(j, "message_latency_scale", c.message_latency_scale, where);
  if (j.contains("fit_kind") && !j["fit_kind"].is_null()) {
    std::string kind;
    read(j, "fit_kind", kind, where);
    c.fit_kind = parse_latency_kind(kind);
  }
  read(j, "edge_threshold", c.edge_threshold, where);
  read(j, "p_stable", c.p_stable, where);
  read(j, "heartbeat_interval_ns", c.heartbeat_interval_ns, where);
  read(j, "exclusion_timeout_intervals", c.exclusion_timeout_intervals, where);
  read(j, "baseline_per_client_bounds", c.baseline_per_client_bounds, where);
  read(j, "trials", c.trials, where);
  read(j, "seed", c.seed, where);
  read(j, "ras_window", c.ras_window, where);
  c.validate();
  if (j.contains("hedging")) out.hedging = hedging_from_json(j["hedging"]);
  return out;
}

FileConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.parent_path());
}

std::string config_to_json(const FileConfig& cfg) {
  const SimConfig& c = cfg.sim;
  json j;
  j["n_clients"] = c.n_clients;
  j["n_events"] = c.n_events;
  j["inter_event_delay_ns"] = c.inter_event_delay_ns;
  j["offset_sigma_ns"] = c.offset_sigma_ns;
  j["drift_sigma_ppm"] = c.drift_sigma_ppm;
  j["sync_interval_ns"] = c.sync_interval_ns;
  j["warmup_probes"] = c.warmup_probes;
  j["sync_samples"] = c.sync_samples;
  j["capacity"] = c.capacity;
  j["sync_latency"] = latency_to_json(c.sync_latency);
  j["message_latency"] = c.message_latency ? latency_to_json(*c.message_latency) : json(nullptr);
  j["message_latency_scale"] = c.message_latency_scale;
  j["fit_kind"] = c.fit_kind ? json(std::string(to_string(*c.fit_kind))) : json(nullptr);
  j["edge_threshold"] = c.edge_threshold;
  j["p_stable"] = c.p_stable;
  j["heartbeat_interval_ns"] = c.heartbeat_interval_ns;
  j["exclusion_timeout_intervals"] = c.exclusion_timeout_intervals;
  j["baseline_per_client_bounds"] = c.baseline_per_client_bounds;
  j["trials"] = c.trials;
  j["seed"] = c.seed;
  j["ras_window"] = c.ras_window;
  const HedgingConfig& h = cfg.hedging;
  j["hedging"] = {{"n_clients", h.n_clients},   {"n_machines", h.n_machines}, {"mean_step_ns", h.mean_step_ns},
                  {"sigma_ns", h.sigma_ns},     {"trials", h.trials},         {"seed", h.seed},
                  {"rotation", h.hedging_rotation == Rotation::kNone ? "none" : "round-robin"}};
  return j.dump(2) + "\n";
}

}  // namespace probseq
