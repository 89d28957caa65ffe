#include "bessim/meter.hpp"

#include <cmath>
#include <string>

namespace bessim {

MeasurementPacket packetize(std::int64_t seq, Tick tick, double hz) {
  if (!std::isfinite(hz)) {
    throw RuntimeError("frequency meter: non-finite reading at tick " + std::to_string(tick));
  }
  return MeasurementPacket{seq, tick, hz};
}

FrequencyMeter::FrequencyMeter(Tick interval_ticks) : interval_(1) { set_interval(interval_ticks); }

void FrequencyMeter::set_interval(Tick interval_ticks) {
  if (interval_ticks < 1) throw ValidationError("meter.interval_ticks: must be >= 1");
  interval_ = interval_ticks;
}

std::optional<MeasurementPacket> FrequencyMeter::maybe_sample(const SimClock& clock, const GridState& grid) {
  if (clock.tick % interval_ != 0) return std::nullopt;
  return packetize(seq_++, clock.tick, grid.frequency_hz);
}

} // namespace bessim
