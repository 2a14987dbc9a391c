#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "probseq/rng.hpp"
#include "probseq/timebase.hpp"

namespace probseq {

/// Invalid or inconsistent experiment configuration.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bounded history of the clock adjustments a synchronization protocol
/// applied to one client. Once full, the oldest sample is overwritten.
class CorrectionDistribution {
 public:
  static constexpr std::size_t kDefaultCapacity = 1000;

  explicit CorrectionDistribution(ClientId client, std::size_t capacity = kDefaultCapacity);
  CorrectionDistribution(ClientId client, std::vector<std::int64_t> samples,
                         std::size_t capacity = kDefaultCapacity);

  void append(std::int64_t correction_ns);

  ClientId client() const { return client_; }
  std::size_t size() const { return ring_.size(); }
  std::size_t capacity() const { return capacity_; }
  bool empty() const { return ring_.empty(); }

  /// Retained samples, oldest first.
  std::vector<std::int64_t> samples() const;

 private:
  ClientId client_;
  std::size_t capacity_;
  std::vector<std::int64_t> ring_;
  std::size_t head_ = 0;  // index of the oldest sample once the ring is full
};

/// Four-timestamp exchange: t1/t4 on the client clock, t2/t3 on the server's.
struct ProbeRecord {
  std::int64_t t1 = 0;
  std::int64_t t2 = 0;
  std::int64_t t3 = 0;
  std::int64_t t4 = 0;
};

/// Server-minus-client offset estimate, i.e. the correction theta in T = t + theta.
std::int64_t ntp_offset_estimate(const ProbeRecord& probe);

enum class LatencyKind { kConstant, kEmpirical, kNormal, kBimodal, kPareto, kLognormal };

std::string_view to_string(LatencyKind kind);
LatencyKind parse_latency_kind(std::string_view name);

/// One-way network delay distribution in nanoseconds. Parameter meaning
/// depends on `kind`:
///   constant:  value
///   empirical: trace (sampled uniformly with replacement)
///   normal:    mean, sigma
///   bimodal:   weight (of component 1), mean/sigma, mean2/sigma2
///   pareto:    shift + scale * U^(-1/shape)
///   lognormal: shift + exp(N(mean, sigma))
struct LatencyModel {
  LatencyKind kind = LatencyKind::kConstant;
  double value = 0.0;
  double mean = 0.0;
  double sigma = 0.0;
  double weight = 0.5;
  double mean2 = 0.0;
  double sigma2 = 0.0;
  double scale = 1.0;
  double shape = 1.0;
  double shift = 0.0;
  std::vector<std::int64_t> trace;

  static LatencyModel constant(std::int64_t ns);
  static LatencyModel empirical(std::vector<std::int64_t> trace);
  static LatencyModel normal(double mean_ns, double sigma_ns);
  static LatencyModel bimodal(double weight, double mean1, double sigma1, double mean2, double sigma2);
  static LatencyModel pareto(double shift_ns, double scale_ns, double shape);
  static LatencyModel lognormal(double shift_ns, double log_mean, double log_sigma);

  /// Throws ConfigError when the parameters cannot be sampled.
  void validate() const;

  /// Support bounds after clamping at zero; d_max is +inf for unbounded kinds.
  double d_min() const;
  double d_max() const;
  /// U = d_max - d_min.
  double uncertainty() const { return d_max() - d_min(); }
};

std::int64_t sample_latency(const LatencyModel& model, Rng& rng);

/// Fit `kind` to observed latencies. Zero-variance input yields a constant
/// model regardless of kind.
LatencyModel fit_distribution(LatencyKind kind, std::span<const std::int64_t> samples);

struct SyncParams {
  std::int64_t interval_ns = 100'000'000;
  std::int64_t duration_ns = 1'000'000'000;
  SimTime start{};
  std::size_t capacity = CorrectionDistribution::kDefaultCapacity;
};

/// A clock adjustment and the true time at which it took effect.
struct ClockStep {
  SimTime at;
  VirtualClock clock;
};

struct SyncResult {
  VirtualClock clock;
  CorrectionDistribution corrections;
  std::vector<ClockStep> steps;
};

/// Runs one probe per interval in [start, start + duration); each probe's
/// offset estimate is applied to the client clock and recorded as a sample.
SyncResult run_sync(ClientId client, const VirtualClock& clock, const VirtualClock& server_clock,
                    const LatencyModel& latency, const SyncParams& params, std::uint64_t rng_seed);

/// One non-negative integer per line, no header.
std::vector<std::int64_t> read_latency_trace(const std::filesystem::path& path);
std::vector<std::int64_t> parse_latency_trace(std::istream& in);

/// CSV `client_id,probe_index,correction_ns`.
void write_corrections_csv(std::ostream& out, std::span<const CorrectionDistribution> dists);
/// Reads the same CSV back into one distribution per client id (dense ids).
std::vector<CorrectionDistribution> read_corrections_csv(std::istream& in,
                                                         std::size_t capacity = CorrectionDistribution::kDefaultCapacity);

}  // namespace probseq
