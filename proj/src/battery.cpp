#include "bessim/battery.hpp"

#include <algorithm>
#include <cmath>

#include "bessim/errors.hpp"

namespace bessim {

namespace {
constexpr double kSecondsPerHour = 3600.0;
}

void BatterySpec::validate() const {
  if (!(power_rating_mw > 0.0) || !std::isfinite(power_rating_mw)) {
    throw ValidationError("battery.power_rating_mw: must be > 0");
  }
  if (!(capacity_mwh > 0.0) || !std::isfinite(capacity_mwh)) {
    throw ValidationError("battery.capacity_mwh: must be > 0");
  }
  if (!(initial_soc_mwh > 0.0) || initial_soc_mwh > capacity_mwh) {
    throw ValidationError("battery.initial_soc_mwh: must be in (0, capacity_mwh]");
  }
}

Actuation actuate(double command_mw, const BatteryState& state, const BatterySpec& spec, double dt_s) {
  if (!(dt_s > 0.0)) throw ValidationError("actuate: dt_s must be > 0");
  Actuation out;
  double p = std::isfinite(command_mw) ? command_mw : 0.0;
  const double rated = std::clamp(p, -spec.power_rating_mw, spec.power_rating_mw);
  out.rating_clamped = rated != p;
  p = rated;

  const double max_discharge = state.soc_mwh * kSecondsPerHour / dt_s;
  const double max_charge = (spec.capacity_mwh - state.soc_mwh) * kSecondsPerHour / dt_s;
  if (p > max_discharge) {
    p = max_discharge;
    out.soc_clamped = true;
  } else if (-p > max_charge) {
    p = -max_charge;
    out.soc_clamped = true;
  }

  out.state.delivered_power_mw = p;
  out.state.soc_mwh = std::clamp(state.soc_mwh - p * dt_s / kSecondsPerHour, 0.0, spec.capacity_mwh);
  return out;
}

BatteryManagementSystem::BatteryManagementSystem(int id, BatterySpec spec, Tick status_interval_ticks)
    : id_(id), spec_(spec), status_interval_(1) {
  spec_.validate();
  set_status_interval(status_interval_ticks);
  state_.soc_mwh = spec_.initial_soc_mwh;
}

void BatteryManagementSystem::set_status_interval(Tick ticks) {
  if (ticks < 1) throw ValidationError("battery.status_interval_ticks: must be >= 1");
  status_interval_ = ticks;
}

Actuation BatteryManagementSystem::step(double dt_s) {
  auto a = actuate(command_mw_, state_, spec_, dt_s);
  state_ = a.state;
  return a;
}

std::optional<StatusPacket> BatteryManagementSystem::emit_status(const SimClock& clock) {
  if (clock.tick % status_interval_ != 0) return std::nullopt;
  return StatusPacket{seq_++, clock.tick, state_.soc_mwh, state_.delivered_power_mw, id_};
}

} // namespace bessim
