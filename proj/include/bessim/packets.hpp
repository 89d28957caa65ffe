#pragma once

#include <cstdint>

#include "bessim/clock.hpp"

namespace bessim {

struct MeasurementPacket {
  std::int64_t seq = 0;
  Tick sent_tick = 0;
  double frequency_hz = 0.0;
  bool operator==(const MeasurementPacket&) const = default;
};

struct ControlPacket {
  std::int64_t seq = 0;
  Tick sent_tick = 0;
  double power_command_mw = 0.0; ///< positive = discharge into the grid
  int bms_id = 0;
  bool operator==(const ControlPacket&) const = default;
};

struct StatusPacket {
  std::int64_t seq = 0;
  Tick sent_tick = 0;
  double soc_mwh = 0.0;
  double delivered_power_mw = 0.0;
  int bms_id = 0;
  bool operator==(const StatusPacket&) const = default;
};

// The scalar an on-path attacker rewrites on each link.
inline double& payload_value(MeasurementPacket& p) { return p.frequency_hz; }
inline double& payload_value(ControlPacket& p) { return p.power_command_mw; }
inline double& payload_value(StatusPacket& p) { return p.delivered_power_mw; }

} // namespace bessim
