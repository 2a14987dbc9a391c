#include "probseq/timebase.hpp"

#include <cmath>

namespace probseq {

std::int64_t ticks::round_nearest(double value) {
  // 2^63 is exactly representable; anything at or beyond it cannot fit.
  constexpr double limit = 9223372036854775808.0;
  if (!std::isfinite(value) || value >= limit || value < -limit) {
    throw TickOverflow("value does not fit in tick range");
  }
  return std::llround(value);
}

LocalTimestamp clock_read(const VirtualClock& clock, SimTime now) {
  if (now < clock.epoch) throw std::invalid_argument("clock_read: now precedes clock epoch");
  const std::int64_t elapsed = ticks::sub(now.ticks, clock.epoch.ticks);
  const std::int64_t drift =
      clock.drift_ppm == 0.0 ? 0 : ticks::round_nearest(clock.drift_ppm * static_cast<double>(elapsed) / 1e6);
  return LocalTimestamp{ticks::add(ticks::add(now.ticks, clock.offset_ns), drift)};
}

VirtualClock clock_step(const VirtualClock& clock, std::int64_t adjustment_ns) {
  VirtualClock out = clock;
  out.offset_ns = ticks::add(clock.offset_ns, adjustment_ns);
  return out;
}

Event EventStream::next(LocalTimestamp ts, std::optional<SimTime> true_time) {
  Event e;
  e.client = client_;
  e.ts = stamp(ts);
  e.seq = next_seq_++;
  e.true_time = true_time;
  return e;
}

LocalTimestamp EventStream::stamp(LocalTimestamp ts) {
  if (last_ && ts < *last_) ts = *last_;
  last_ = ts;
  return ts;
}

std::string to_string(ClientId id) { return std::to_string(id.value); }

}  // namespace probseq
