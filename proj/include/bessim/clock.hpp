#pragma once

#include <cmath>
#include <cstdint>

#include "bessim/errors.hpp"

namespace bessim {

using Tick = std::int64_t;

/// Logical simulation time. One tick is 1/tick_hz seconds; the default 50 Hz
/// matches a sensor that reports every 50 ticks, i.e. once per second.
struct SimClock {
  Tick tick = 0;
  int tick_hz = 50;

  [[nodiscard]] double time_s() const { return static_cast<double>(tick) / tick_hz; }
  [[nodiscard]] double dt_s() const { return 1.0 / tick_hz; }

  /// Seconds to ticks, rounded to the nearest tick.
  [[nodiscard]] Tick ticks_for(double seconds) const { return std::llround(seconds * tick_hz); }

  void advance() { ++tick; }
};

inline void validate_tick_hz(int tick_hz) {
  if (tick_hz < 1) throw ValidationError("clock.tick_hz: must be >= 1");
}

} // namespace bessim
