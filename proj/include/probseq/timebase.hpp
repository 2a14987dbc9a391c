#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

namespace probseq {

/// Raised when tick arithmetic would leave the signed 64-bit range.
class TickOverflow : public std::overflow_error {
 public:
  using std::overflow_error::overflow_error;
};

namespace ticks {

inline std::int64_t add(std::int64_t a, std::int64_t b) {
  std::int64_t out;
  if (__builtin_add_overflow(a, b, &out)) throw TickOverflow("tick addition overflows");
  return out;
}

inline std::int64_t sub(std::int64_t a, std::int64_t b) {
  std::int64_t out;
  if (__builtin_sub_overflow(a, b, &out)) throw TickOverflow("tick subtraction overflows");
  return out;
}

inline std::int64_t mul(std::int64_t a, std::int64_t b) {
  std::int64_t out;
  if (__builtin_mul_overflow(a, b, &out)) throw TickOverflow("tick multiplication overflows");
  return out;
}

/// Round to the nearest integer tick, ties away from zero.
std::int64_t round_nearest(double value);

}  // namespace ticks

/// Nanoseconds of true (global) simulated time.
struct SimTime {
  std::int64_t ticks = 0;
  friend auto operator<=>(const SimTime&, const SimTime&) = default;
};

/// Nanoseconds on one client's local clock.
struct LocalTimestamp {
  std::int64_t ticks = 0;
  friend auto operator<=>(const LocalTimestamp&, const LocalTimestamp&) = default;
};

struct ClientId {
  std::uint32_t value = 0;
  friend auto operator<=>(const ClientId&, const ClientId&) = default;
};

/// Identity of an event independent of its timestamp.
struct EventKey {
  ClientId client;
  std::uint64_t seq = 0;
  friend auto operator<=>(const EventKey&, const EventKey&) = default;
};

/// An event as submitted for ordering. `true_time` is ground truth and only
/// populated by the simulator; ordering code never consults it.
struct Event {
  ClientId client;
  LocalTimestamp ts;
  std::uint64_t seq = 0;
  std::optional<SimTime> true_time;

  EventKey key() const { return {client, seq}; }
};

/// Lexicographic (ts, client, seq) order used wherever a deterministic
/// tie-break between events is needed.
inline bool timestamp_order(const Event& a, const Event& b) {
  if (a.ts != b.ts) return a.ts < b.ts;
  if (a.client != b.client) return a.client < b.client;
  return a.seq < b.seq;
}

/// Linear-drift clock: local = now + offset + drift_ppm * (now - epoch) / 1e6.
struct VirtualClock {
  std::int64_t offset_ns = 0;
  double drift_ppm = 0.0;
  SimTime epoch{};
};

LocalTimestamp clock_read(const VirtualClock& clock, SimTime now);

VirtualClock clock_step(const VirtualClock& clock, std::int64_t adjustment_ns);

/// Builds events for one client and enforces that timestamps never go
/// backwards within the stream; a read below the previous timestamp is
/// clamped up to it, as a monotonic clock API would.
class EventStream {
 public:
  explicit EventStream(ClientId client) : client_(client) {}

  Event next(LocalTimestamp ts, std::optional<SimTime> true_time = std::nullopt);
  /// Timestamp a heartbeat would carry if read now; same clamping rule.
  LocalTimestamp stamp(LocalTimestamp ts);

  ClientId client() const { return client_; }
  std::uint64_t issued() const { return next_seq_; }

 private:
  ClientId client_;
  std::uint64_t next_seq_ = 0;
  std::optional<LocalTimestamp> last_;
};

std::string to_string(ClientId id);

}  // namespace probseq
