#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "bessim/clock.hpp"
#include "bessim/rng.hpp"

namespace bessim {

/// Closed interval [start_s, stop_s]; an absent stop means "until the end".
struct ActivationWindow {
  double start_s = 0.0;
  std::optional<double> stop_s;

  [[nodiscard]] bool contains(double t_s) const {
    return t_s >= start_s && (!stop_s || t_s <= *stop_s);
  }
  bool operator==(const ActivationWindow&) const = default;
};

struct PulseSpec {
  double magnitude = 0.0;
  int every_n = 1;
  bool operator==(const PulseSpec&) const = default;
};

/// Payload mutation. Values are Hz on s2c and MW on c2b.
struct FdiSpec {
  int interval = 1;
  double offset = 0.0;
  double random_lo = 0.0;
  double random_hi = 0.0;
  std::optional<double> base;
  double scale = 1.0;
  double ramp_rate = 0.0; ///< per second since start_s
  std::optional<PulseSpec> pulse;
  ActivationWindow window;

  void validate(const std::string& path) const;
  bool operator==(const FdiSpec&) const = default;
};

struct FdiCounters {
  std::uint64_t packets = 0; ///< in-window packets seen
  std::uint64_t mutated = 0;
};

/// Mutates one in-flight value. Outside the activation window it is the
/// identity and counters do not move. Inside, every `interval`-th packet goes
/// through base -> ramp -> scale -> offset -> random -> pulse. Each in-window
/// call consumes exactly one draw from `rng`.
double apply_fdi(double value, const FdiSpec& spec, FdiCounters& counters, double t_s, RngStream& rng);

struct ReplaySpec {
  double start_s = 0.0;
  double record_duration_s = 0.0;
  double replay_duration_s = 0.0;

  void validate(const std::string& path) const;
  bool operator==(const ReplaySpec&) const = default;
};

enum class ReplayPhase { passthrough, record, replay };

struct ReplayState {
  std::vector<double> buffer;
  std::size_t cursor = 0;
};

ReplayPhase replay_phase(const ReplaySpec& spec, double t_s);

/// Records during [start, start + record), substitutes recorded values in
/// order (cycling) during the following replay span. An empty buffer in the
/// replay span passes through and sets `*empty_buffer`.
double replay_step(double value, const ReplaySpec& spec, double t_s, ReplayState& state,
                   bool* empty_buffer = nullptr);

enum class FollowMode { reinforce, oppose };

/// Consumption offset that tracks the battery: `reinforce` pushes consumption
/// by -sign(battery_power) * magnitude, which adds to the battery's own effect
/// on frequency; `oppose` uses the other sign.
struct FollowBattery {
  FollowMode mode = FollowMode::reinforce;
  double magnitude_mw = 0.0;
  bool operator==(const FollowBattery&) const = default;
};

struct LoadAlterSpec {
  int interval = 50; ///< ticks between alterations
  double offset_mw = 0.0;
  double random_lo = 0.0;
  double random_hi = 0.0;
  std::optional<FollowBattery> follow_battery;
  ActivationWindow window;

  void validate(const std::string& path) const;
  bool operator==(const LoadAlterSpec&) const = default;
};

struct LoadAlterState {
  double effect_mw = 0.0;
};

/// On each interval boundary inside the window the effect is redrawn as
/// offset + U(lo, hi) + follow term, then held. Outside the window it is 0.
double apply_load_alteration(const LoadAlterSpec& spec, const SimClock& clock, double battery_power_mw,
                             RngStream& rng, LoadAlterState& state);

enum class TriggerMode { once, latched, continuous };

/// Signals: time_s, true_f, measured_f, battery_power, soc.
struct TriggerCondition {
  std::string signal = "true_f";
  std::optional<double> deviation_from; ///< compare |x - deviation_from| instead of x
  std::string op = ">";
  double value = 0.0;
  bool operator==(const TriggerCondition&) const = default;
};

/// When the condition holds, `action` (a merge patch on the scenario) is
/// applied at the next tick boundary.
struct TriggerRule {
  std::string name;
  TriggerCondition condition;
  nlohmann::json action = nlohmann::json::object();
  TriggerMode mode = TriggerMode::once;

  void validate(const std::string& path) const;
  bool operator==(const TriggerRule&) const = default;
};

struct TriggerSnapshot {
  double time_s = 0.0;
  double true_f = 0.0;
  std::optional<double> measured_f;
  double battery_power = 0.0;
  double soc = 0.0;
};

struct TriggerState {
  bool armed = true;
  bool was_true = false;
  bool disabled = false;
  std::uint64_t fired = 0;
};

/// Returns the indices of rules that fire on this snapshot and updates their
/// state. A condition on an absent signal (measured_f before first delivery)
/// is false.
std::vector<std::size_t> evaluate_triggers(const std::vector<TriggerRule>& rules,
                                           std::vector<TriggerState>& states, const TriggerSnapshot& snap);

std::string to_string(TriggerMode m);
std::string to_string(FollowMode m);

} // namespace bessim
