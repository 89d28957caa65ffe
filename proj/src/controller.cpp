#include "bessim/controller.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "bessim/errors.hpp"

namespace bessim {

void PidConfig::validate() const {
  auto finite = [](double v) { return std::isfinite(v); };
  if (!finite(kp) || kp < 0.0) throw ValidationError("controller.kp: must be >= 0");
  if (!finite(ki) || ki < 0.0) throw ValidationError("controller.ki: must be >= 0");
  if (!finite(kd) || kd < 0.0) throw ValidationError("controller.kd: must be >= 0");
  if (!finite(setpoint_hz) || setpoint_hz <= 0.0) throw ValidationError("controller.setpoint_hz: must be > 0");
  if (!finite(output_limit_mw) || output_limit_mw <= 0.0) {
    throw ValidationError("controller.output_limit_mw: must be > 0");
  }
  if (!(max_dt_s > 0.0)) throw ValidationError("controller.max_dt_s: must be > 0");
}

double pid_step(double error_hz, double dt_s, PidState& state, const PidConfig& cfg) {
  if (!(dt_s > 0.0)) throw ValidationError("pid_step: dt_s must be > 0");
  const double lim = cfg.output_limit_mw;
  const double derivative =
      state.has_last_error ? cfg.kd * (error_hz - state.last_error) / dt_s : 0.0;

  double integral = state.integral + error_hz * dt_s;
  double u = cfg.kp * error_hz + cfg.ki * integral + derivative;
  if (std::abs(u) > lim && error_hz * u > 0.0) integral = state.integral;
  if (cfg.ki > 0.0) {
    const double bound = lim / cfg.ki;
    integral = std::clamp(integral, -bound, bound);
  }
  u = cfg.kp * error_hz + cfg.ki * integral + derivative;

  state.integral = integral;
  state.last_error = error_hz;
  state.has_last_error = true;
  return std::clamp(u, -lim, lim);
}

std::vector<double> dispatch(double command_mw, const std::vector<double>& headroom_mw, bool* starved) {
  if (headroom_mw.empty()) throw ValidationError("dispatch: no BMS registered");
  std::vector<double> out(headroom_mw.size(), 0.0);
  const double total = std::accumulate(headroom_mw.begin(), headroom_mw.end(), 0.0,
                                       [](double acc, double h) { return acc + std::max(h, 0.0); });
  if (starved) *starved = !(total > 0.0);
  if (!(total > 0.0)) return out;
  if (headroom_mw.size() == 1) {
    out[0] = command_mw;
    return out;
  }
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = command_mw * std::max(headroom_mw[i], 0.0) / total;
  return out;
}

CloudController::CloudController(PidConfig cfg) : cfg_(cfg) { cfg_.validate(); }

void CloudController::set_config(const PidConfig& cfg) {
  cfg.validate();
  cfg_ = cfg;
}

ControllerOutput CloudController::on_measurement(const MeasurementPacket& pkt, const SimClock& clock,
                                                 const std::vector<double>& headroom_mw) {
  ControllerOutput out;
  double u = 0.0;
  if (!std::isfinite(pkt.frequency_hz)) {
    out.rejected_payload = true;
  } else {
    last_measurement_ = pkt.frequency_hz;
    const Tick spacing = std::max<Tick>(clock.tick - state_.last_update_tick, 1);
    const double dt = std::min(static_cast<double>(spacing) / clock.tick_hz, cfg_.max_dt_s);
    state_.last_update_tick = clock.tick;
    u = pid_step(cfg_.setpoint_hz - pkt.frequency_hz, dt, state_, cfg_);
  }
  last_command_ = u;
  out.command_mw = u;
  const auto split = dispatch(u, headroom_mw, &out.starved);
  for (std::size_t i = 0; i < split.size(); ++i) {
    out.packets.push_back(ControlPacket{seq_++, clock.tick, split[i], static_cast<int>(i)});
  }
  return out;
}

} // namespace bessim
