#pragma once

#include <optional>

#include "bessim/clock.hpp"
#include "bessim/packets.hpp"

namespace bessim {

struct BatterySpec {
  double power_rating_mw = 2.0;
  double capacity_mwh = 2.0;
  double initial_soc_mwh = 1.0;

  void validate() const;
  bool operator==(const BatterySpec&) const = default;
};

struct BatteryState {
  double soc_mwh = 0.0;
  double delivered_power_mw = 0.0; ///< positive = discharging into the grid
};

struct Actuation {
  BatteryState state;
  bool rating_clamped = false;
  bool soc_clamped = false;
};

/// Applies `command_mw` for `dt_s` seconds. Power is clamped to the rating and
/// then curtailed so that SoC stays within [0, capacity] over the step.
Actuation actuate(double command_mw, const BatteryState& state, const BatterySpec& spec, double dt_s);

/// BMS plus its battery. Holds the last received command and applies it every
/// tick until a new one arrives.
class BatteryManagementSystem {
public:
  BatteryManagementSystem(int id, BatterySpec spec, Tick status_interval_ticks = 50);

  void receive(const ControlPacket& pkt) { command_mw_ = pkt.power_command_mw; }
  Actuation step(double dt_s);
  std::optional<StatusPacket> emit_status(const SimClock& clock);

  /// Headroom reported to dispatch: the power rating.
  [[nodiscard]] double headroom_mw() const { return spec_.power_rating_mw; }
  [[nodiscard]] int id() const { return id_; }
  [[nodiscard]] const BatteryState& state() const { return state_; }
  [[nodiscard]] const BatterySpec& spec() const { return spec_; }
  [[nodiscard]] double command_mw() const { return command_mw_; }
  void set_status_interval(Tick ticks);

private:
  int id_;
  BatterySpec spec_;
  BatteryState state_;
  Tick status_interval_;
  double command_mw_ = 0.0;
  std::int64_t seq_ = 0;
};

} // namespace bessim
