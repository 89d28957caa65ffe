#pragma once

#include <optional>
#include <vector>

#include "bessim/clock.hpp"
#include "bessim/packets.hpp"

namespace bessim {

/// Gains are in MW/Hz, MW/(Hz s) and MW s/Hz.
struct PidConfig {
  double kp = 2.1;
  double ki = 1.5;
  double kd = 0.0;
  double setpoint_hz = 50.0;
  double output_limit_mw = 2.0;
  /// Upper bound on the integration step taken from packet spacing.
  double max_dt_s = 2.0;

  void validate() const;
  bool operator==(const PidConfig&) const = default;
};

struct PidState {
  double integral = 0.0; ///< Hz s
  double last_error = 0.0;
  bool has_last_error = false;
  Tick last_update_tick = 0;
};

/// One PID update with conditional integration: the integral is held while the
/// output is saturated in the direction of the error, and ki * integral never
/// exceeds the output limit. Throws ValidationError if dt_s <= 0.
double pid_step(double error_hz, double dt_s, PidState& state, const PidConfig& cfg);

/// Splits `command_mw` across BMSs in proportion to their headroom.
/// All-zero headroom yields all-zero commands and sets `*starved`.
std::vector<double> dispatch(double command_mw, const std::vector<double>& headroom_mw,
                             bool* starved = nullptr);

struct ControllerOutput {
  std::vector<ControlPacket> packets;
  double command_mw = 0.0;
  bool rejected_payload = false; ///< non-finite measurement, 0 MW sent
  bool starved = false;          ///< dispatch found no headroom
};

/// The cloud control system. Measurements are consumed in arrival order with
/// no staleness check; dt is the tick spacing between consecutive arrivals,
/// floored at one tick and capped at max_dt_s.
class CloudController {
public:
  explicit CloudController(PidConfig cfg = {});

  ControllerOutput on_measurement(const MeasurementPacket& pkt, const SimClock& clock,
                                  const std::vector<double>& headroom_mw);
  void on_status(const StatusPacket& pkt) { last_status_ = pkt; }

  void set_config(const PidConfig& cfg);
  [[nodiscard]] const PidConfig& config() const { return cfg_; }
  [[nodiscard]] const PidState& state() const { return state_; }
  [[nodiscard]] std::optional<double> last_measurement() const { return last_measurement_; }
  [[nodiscard]] double last_command() const { return last_command_; }
  [[nodiscard]] const std::optional<StatusPacket>& last_status() const { return last_status_; }

private:
  PidConfig cfg_;
  PidState state_;
  std::int64_t seq_ = 0;
  std::optional<double> last_measurement_;
  double last_command_ = 0.0;
  std::optional<StatusPacket> last_status_;
};

} // namespace bessim
