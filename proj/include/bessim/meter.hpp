#pragma once

#include <optional>

#include "bessim/clock.hpp"
#include "bessim/grid.hpp"
#include "bessim/packets.hpp"

namespace bessim {

/// Throws RuntimeError on a non-finite reading.
MeasurementPacket packetize(std::int64_t seq, Tick tick, double hz);

/// Samples the true grid frequency every `interval_ticks` ticks.
class FrequencyMeter {
public:
  explicit FrequencyMeter(Tick interval_ticks = 50);

  std::optional<MeasurementPacket> maybe_sample(const SimClock& clock, const GridState& grid);

  void set_interval(Tick interval_ticks);
  [[nodiscard]] Tick interval() const { return interval_; }
  [[nodiscard]] std::int64_t next_seq() const { return seq_; }

private:
  Tick interval_;
  std::int64_t seq_ = 0;
};

} // namespace bessim
