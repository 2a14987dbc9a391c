#include "probseq/syncsim.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <numeric>
#include <ostream>
#include <sstream>

#include "csv_util.hpp"

namespace probseq {

CorrectionDistribution::CorrectionDistribution(ClientId client, std::size_t capacity)
    : client_(client), capacity_(capacity) {
  if (capacity_ == 0) throw ConfigError("correction distribution capacity must be positive");
  ring_.reserve(std::min<std::size_t>(capacity_, 1024));
}

CorrectionDistribution::CorrectionDistribution(ClientId client, std::vector<std::int64_t> samples,
                                               std::size_t capacity)
    : CorrectionDistribution(client, capacity) {
  for (auto s : samples) append(s);
}

void CorrectionDistribution::append(std::int64_t correction_ns) {
  if (ring_.size() < capacity_) {
    ring_.push_back(correction_ns);
    return;
  }
  ring_[head_] = correction_ns;
  head_ = (head_ + 1) % capacity_;
}

std::vector<std::int64_t> CorrectionDistribution::samples() const {
  std::vector<std::int64_t> out;
  out.reserve(ring_.size());
  out.insert(out.end(), ring_.begin() + static_cast<std::ptrdiff_t>(head_), ring_.end());
  out.insert(out.end(), ring_.begin(), ring_.begin() + static_cast<std::ptrdiff_t>(head_));
  return out;
}

std::int64_t ntp_offset_estimate(const ProbeRecord& p) {
  const std::int64_t forward = ticks::sub(p.t2, p.t1);
  const std::int64_t backward = ticks::sub(p.t3, p.t4);
  // Integer division truncates toward zero.
  return ticks::add(forward, backward) / 2;
}

// ---------------------------------------------------------------------------
// Latency models

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct KindName {
  LatencyKind kind;
  std::string_view name;
};

constexpr KindName kKindNames[] = {
    {LatencyKind::kConstant, "constant"}, {LatencyKind::kEmpirical, "empirical"},
    {LatencyKind::kNormal, "normal"},     {LatencyKind::kBimodal, "bimodal"},
    {LatencyKind::kPareto, "pareto"},     {LatencyKind::kLognormal, "lognormal"},
};

std::int64_t clamp_draw(double x) {
  if (!(x > 0.0)) return 0;
  return ticks::round_nearest(x);
}

double mean_of(std::span<const double> xs) {
  return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

double population_variance(std::span<const double> xs, double mean) {
  double acc = 0.0;
  for (double x : xs) acc += (x - mean) * (x - mean);
  return acc / static_cast<double>(xs.size());
}

double normal_pdf(double x, double mean, double sigma) {
  constexpr double inv_sqrt_2pi = 0.3989422804014327;
  const double z = (x - mean) / sigma;
  return inv_sqrt_2pi / sigma * std::exp(-0.5 * z * z);
}

LatencyModel fit_bimodal(std::span<const double> xs) {
  // Two-means split seeded at the extremes, then a fixed number of EM steps.
  const auto [lo_it, hi_it] = std::minmax_element(xs.begin(), xs.end());
  double c1 = *lo_it;
  double c2 = *hi_it;
  std::vector<int> label(xs.size(), 0);
  for (int iter = 0; iter < 20; ++iter) {
    double s1 = 0, s2 = 0;
    std::size_t n1 = 0, n2 = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      label[i] = std::abs(xs[i] - c1) <= std::abs(xs[i] - c2) ? 0 : 1;
      if (label[i] == 0) {
        s1 += xs[i];
        ++n1;
      } else {
        s2 += xs[i];
        ++n2;
      }
    }
    if (n1 == 0 || n2 == 0) break;
    c1 = s1 / static_cast<double>(n1);
    c2 = s2 / static_cast<double>(n2);
  }

  const double overall_mean = mean_of(xs);
  const double overall_var = population_variance(xs, overall_mean);
  // Keeps a collapsed component from producing a zero-width density.
  const double var_floor = std::max(1.0, overall_var * 1e-6);

  double w = 0.0, m1 = 0.0, m2 = 0.0, v1 = 0.0, v2 = 0.0;
  {
    double n1 = 0, n2 = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) (label[i] == 0 ? n1 : n2) += 1;
    if (n1 == 0 || n2 == 0) {
      return LatencyModel::normal(overall_mean, std::sqrt(overall_var));
    }
    for (std::size_t i = 0; i < xs.size(); ++i) (label[i] == 0 ? m1 : m2) += xs[i];
    m1 /= n1;
    m2 /= n2;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      if (label[i] == 0) v1 += (xs[i] - m1) * (xs[i] - m1);
      else v2 += (xs[i] - m2) * (xs[i] - m2);
    }
    v1 = std::max(v1 / n1, var_floor);
    v2 = std::max(v2 / n2, var_floor);
    w = n1 / static_cast<double>(xs.size());
  }

  std::vector<double> resp(xs.size());
  for (int iter = 0; iter < 100; ++iter) {
    const double s1 = std::sqrt(v1), s2 = std::sqrt(v2);
    for (std::size_t i = 0; i < xs.size(); ++i) {
      const double a = w * normal_pdf(xs[i], m1, s1);
      const double b = (1.0 - w) * normal_pdf(xs[i], m2, s2);
      const double total = a + b;
      // Points far in both tails underflow; assign them to the nearer mean.
      resp[i] = total > 0.0 ? a / total : (std::abs(xs[i] - m1) <= std::abs(xs[i] - m2) ? 1.0 : 0.0);
    }
    double r1 = 0, r2 = 0, sum1 = 0, sum2 = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      r1 += resp[i];
      r2 += 1.0 - resp[i];
      sum1 += resp[i] * xs[i];
      sum2 += (1.0 - resp[i]) * xs[i];
    }
    if (r1 <= 0.0 || r2 <= 0.0) break;
    m1 = sum1 / r1;
    m2 = sum2 / r2;
    double q1 = 0, q2 = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      q1 += resp[i] * (xs[i] - m1) * (xs[i] - m1);
      q2 += (1.0 - resp[i]) * (xs[i] - m2) * (xs[i] - m2);
    }
    v1 = std::max(q1 / r1, var_floor);
    v2 = std::max(q2 / r2, var_floor);
    w = r1 / static_cast<double>(xs.size());
  }
  return LatencyModel::bimodal(w, m1, std::sqrt(v1), m2, std::sqrt(v2));
}

}  // namespace

std::string_view to_string(LatencyKind kind) {
  for (const auto& kn : kKindNames) {
    if (kn.kind == kind) return kn.name;
  }
  return "unknown";
}

LatencyKind parse_latency_kind(std::string_view name) {
  for (const auto& kn : kKindNames) {
    if (kn.name == name) return kn.kind;
  }
  throw ConfigError("unknown latency model kind: " + std::string(name));
}

LatencyModel LatencyModel::constant(std::int64_t ns) {
  LatencyModel m;
  m.kind = LatencyKind::kConstant;
  m.value = static_cast<double>(ns);
  return m;
}

LatencyModel LatencyModel::empirical(std::vector<std::int64_t> trace) {
  LatencyModel m;
  m.kind = LatencyKind::kEmpirical;
  m.trace = std::move(trace);
  return m;
}

LatencyModel LatencyModel::normal(double mean_ns, double sigma_ns) {
  LatencyModel m;
  m.kind = LatencyKind::kNormal;
  m.mean = mean_ns;
  m.sigma = sigma_ns;
  return m;
}

LatencyModel LatencyModel::bimodal(double weight, double mean1, double sigma1, double mean2, double sigma2) {
  LatencyModel m;
  m.kind = LatencyKind::kBimodal;
  m.weight = weight;
  m.mean = mean1;
  m.sigma = sigma1;
  m.mean2 = mean2;
  m.sigma2 = sigma2;
  return m;
}

LatencyModel LatencyModel::pareto(double shift_ns, double scale_ns, double shape) {
  LatencyModel m;
  m.kind = LatencyKind::kPareto;
  m.shift = shift_ns;
  m.scale = scale_ns;
  m.shape = shape;
  return m;
}

LatencyModel LatencyModel::lognormal(double shift_ns, double log_mean, double log_sigma) {
  LatencyModel m;
  m.kind = LatencyKind::kLognormal;
  m.shift = shift_ns;
  m.mean = log_mean;
  m.sigma = log_sigma;
  return m;
}

void LatencyModel::validate() const {
  switch (kind) {
    case LatencyKind::kConstant:
      if (value < 0.0) throw ConfigError("constant latency must be non-negative");
      break;
    case LatencyKind::kEmpirical:
      if (trace.empty()) throw ConfigError("empirical latency model requires a non-empty trace");
      for (auto v : trace) {
        if (v < 0) throw ConfigError("latency trace values must be non-negative");
      }
      break;
    case LatencyKind::kNormal:
    case LatencyKind::kLognormal:
      if (!(sigma >= 0.0)) throw ConfigError("latency sigma must be non-negative");
      break;
    case LatencyKind::kBimodal:
      if (!(weight >= 0.0 && weight <= 1.0)) throw ConfigError("bimodal weight must lie in [0,1]");
      if (!(sigma >= 0.0 && sigma2 >= 0.0)) throw ConfigError("bimodal sigmas must be non-negative");
      break;
    case LatencyKind::kPareto:
      if (!(scale > 0.0 && shape > 0.0)) throw ConfigError("pareto scale and shape must be positive");
      break;
  }
}

double LatencyModel::d_min() const {
  switch (kind) {
    case LatencyKind::kConstant:
      return std::max(0.0, value);
    case LatencyKind::kEmpirical:
      return trace.empty() ? 0.0 : static_cast<double>(*std::min_element(trace.begin(), trace.end()));
    case LatencyKind::kNormal:
      return sigma == 0.0 ? std::max(0.0, mean) : 0.0;
    case LatencyKind::kBimodal:
      if (sigma == 0.0 && sigma2 == 0.0) return std::max(0.0, std::min(mean, mean2));
      return 0.0;
    case LatencyKind::kPareto:
      return std::max(0.0, shift + scale);
    case LatencyKind::kLognormal:
      return std::max(0.0, shift);
  }
  return 0.0;
}

double LatencyModel::d_max() const {
  switch (kind) {
    case LatencyKind::kConstant:
      return std::max(0.0, value);
    case LatencyKind::kEmpirical:
      return trace.empty() ? 0.0 : static_cast<double>(*std::max_element(trace.begin(), trace.end()));
    case LatencyKind::kNormal:
      return sigma == 0.0 ? std::max(0.0, mean) : kInf;
    case LatencyKind::kBimodal:
      if (sigma == 0.0 && sigma2 == 0.0) return std::max(0.0, std::max(mean, mean2));
      return kInf;
    case LatencyKind::kPareto:
    case LatencyKind::kLognormal:
      return kInf;
  }
  return kInf;
}

std::int64_t sample_latency(const LatencyModel& m, Rng& rng) {
  switch (m.kind) {
    case LatencyKind::kConstant:
      return clamp_draw(m.value);
    case LatencyKind::kEmpirical: {
      if (m.trace.empty()) throw ConfigError("empirical latency model requires a non-empty trace");
      std::uniform_int_distribution<std::size_t> pick(0, m.trace.size() - 1);
      return std::max<std::int64_t>(0, m.trace[pick(rng)]);
    }
    case LatencyKind::kNormal: {
      std::normal_distribution<double> d(m.mean, m.sigma);
      return clamp_draw(m.sigma == 0.0 ? m.mean : d(rng));
    }
    case LatencyKind::kBimodal: {
      std::uniform_real_distribution<double> u(0.0, 1.0);
      std::normal_distribution<double> z(0.0, 1.0);
      const bool first = u(rng) < m.weight;
      const double draw = z(rng);
      return clamp_draw(first ? m.mean + m.sigma * draw : m.mean2 + m.sigma2 * draw);
    }
    case LatencyKind::kPareto: {
      std::uniform_real_distribution<double> u(0.0, 1.0);
      const double v = 1.0 - u(rng);  // (0, 1]
      return clamp_draw(m.shift + m.scale * std::pow(v, -1.0 / m.shape));
    }
    case LatencyKind::kLognormal: {
      std::normal_distribution<double> z(0.0, 1.0);
      return clamp_draw(m.shift + std::exp(m.mean + m.sigma * z(rng)));
    }
  }
  return 0;
}

LatencyModel fit_distribution(LatencyKind kind, std::span<const std::int64_t> samples) {
  std::size_t required = 2;
  if (kind == LatencyKind::kConstant || kind == LatencyKind::kEmpirical) required = 1;
  if (kind == LatencyKind::kBimodal) required = 10;
  if (samples.size() < required) {
    throw ConfigError("fit_distribution: need at least " + std::to_string(required) + " samples for " +
                      std::string(to_string(kind)));
  }

  std::vector<double> xs(samples.begin(), samples.end());
  const double mean = mean_of(xs);
  const double var = population_variance(xs, mean);
  if (var == 0.0 || kind == LatencyKind::kConstant) {
    return LatencyModel::constant(ticks::round_nearest(mean));
  }

  switch (kind) {
    case LatencyKind::kConstant:
      break;
    case LatencyKind::kEmpirical:
      return LatencyModel::empirical(std::vector<std::int64_t>(samples.begin(), samples.end()));
    case LatencyKind::kNormal:
      return LatencyModel::normal(mean, std::sqrt(var));
    case LatencyKind::kBimodal:
      return fit_bimodal(xs);
    case LatencyKind::kPareto: {
      // Type I MLE: scale = min, shape = n / sum ln(x / min). Non-positive
      // data is shifted so the minimum sits at 1.
      const double lo = *std::min_element(xs.begin(), xs.end());
      const double shift = lo > 0.0 ? 0.0 : lo - 1.0;
      const double scale = lo - shift;
      double log_sum = 0.0;
      for (double x : xs) log_sum += std::log((x - shift) / scale);
      const double shape = static_cast<double>(xs.size()) / log_sum;
      return LatencyModel::pareto(shift, scale, shape);
    }
    case LatencyKind::kLognormal: {
      const double lo = *std::min_element(xs.begin(), xs.end());
      std::vector<double> logs;
      logs.reserve(xs.size());
      for (double x : xs) logs.push_back(std::log(x - lo + 1.0));
      const double lm = mean_of(logs);
      return LatencyModel::lognormal(lo - 1.0, lm, std::sqrt(population_variance(logs, lm)));
    }
  }
  return LatencyModel::constant(ticks::round_nearest(mean));
}

// ---------------------------------------------------------------------------
// Protocol

SyncResult run_sync(ClientId client, const VirtualClock& clock, const VirtualClock& server_clock,
                    const LatencyModel& latency, const SyncParams& params, std::uint64_t rng_seed) {
  if (params.interval_ns <= 0) throw ConfigError("sync interval must be positive");
  if (params.duration_ns < 0) throw ConfigError("sync duration must be non-negative");
  latency.validate();

  SyncResult result{clock, CorrectionDistribution(client, params.capacity), {}};
  Rng rng(rng_seed);
  const std::int64_t probes = params.duration_ns / params.interval_ns;
  result.steps.reserve(static_cast<std::size_t>(probes));

  for (std::int64_t k = 0; k < probes; ++k) {
    const SimTime send{ticks::add(params.start.ticks, ticks::mul(k, params.interval_ns))};
    const std::int64_t d_fwd = sample_latency(latency, rng);
    const std::int64_t d_back = sample_latency(latency, rng);
    const SimTime at_server{ticks::add(send.ticks, d_fwd)};
    const SimTime back{ticks::add(at_server.ticks, d_back)};

    ProbeRecord probe;
    probe.t1 = clock_read(result.clock, send).ticks;
    probe.t2 = clock_read(server_clock, at_server).ticks;
    probe.t3 = probe.t2;
    probe.t4 = clock_read(result.clock, back).ticks;

    const std::int64_t adjustment = ntp_offset_estimate(probe);
    result.clock = clock_step(result.clock, adjustment);
    result.corrections.append(adjustment);
    result.steps.push_back({back, result.clock});
  }
  return result;
}

// ---------------------------------------------------------------------------
// Files

std::vector<std::int64_t> parse_latency_trace(std::istream& in) {
  std::vector<std::int64_t> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto v = csv::parse_int(line);
    if (!v || *v < 0) {
      throw ConfigError("latency trace line " + std::to_string(lineno) + ": expected non-negative integer");
    }
    out.push_back(*v);
  }
  if (out.empty()) throw ConfigError("latency trace is empty");
  return out;
}

std::vector<std::int64_t> read_latency_trace(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open latency trace: " + path.string());
  return parse_latency_trace(in);
}

void write_corrections_csv(std::ostream& out, std::span<const CorrectionDistribution> dists) {
  out << "client_id,probe_index,correction_ns\n";
  for (const auto& d : dists) {
    const auto s = d.samples();
    for (std::size_t i = 0; i < s.size(); ++i) {
      out << d.client().value << ',' << i << ',' << s[i] << '\n';
    }
  }
}

std::vector<CorrectionDistribution> read_corrections_csv(std::istream& in, std::size_t capacity) {
  std::map<std::uint32_t, std::vector<std::pair<std::int64_t, std::int64_t>>> by_client;
  csv::Reader reader(in, {"client_id", "probe_index", "correction_ns"});
  while (auto row = reader.next()) {
    const auto client = reader.get_int(*row, 0);
    if (client < 0) throw ConfigError("corrections csv: negative client id");
    by_client[static_cast<std::uint32_t>(client)].emplace_back(reader.get_int(*row, 1), reader.get_int(*row, 2));
  }
  std::vector<CorrectionDistribution> out;
  std::uint32_t expected = 0;
  for (auto& [client, rows] : by_client) {
    if (client != expected) throw ConfigError("corrections csv: client ids must be dense from 0");
    ++expected;
    std::sort(rows.begin(), rows.end());
    CorrectionDistribution d(ClientId{client}, capacity);
    for (const auto& [idx, value] : rows) d.append(value);
    out.push_back(std::move(d));
  }
  if (out.empty()) throw ConfigError("corrections csv has no samples");
  return out;
}

}  // namespace probseq
