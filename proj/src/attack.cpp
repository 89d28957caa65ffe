#include "bessim/attack.hpp"

#include <cmath>

#include "bessim/errors.hpp"

namespace bessim {

namespace {

void check_window(const ActivationWindow& w, const std::string& path) {
  if (!std::isfinite(w.start_s) || w.start_s < 0.0) throw ValidationError(path + ".start_s: must be >= 0");
  if (w.stop_s && !(*w.stop_s >= w.start_s)) throw ValidationError(path + ".stop_s: must be >= start_s");
}

void check_finite(double v, const std::string& path) {
  if (!std::isfinite(v)) throw ValidationError(path + ": must be finite");
}

double sign(double x) { return static_cast<double>((x > 0.0) - (x < 0.0)); }

} // namespace

void FdiSpec::validate(const std::string& path) const {
  if (interval < 1) throw ValidationError(path + ".interval: must be >= 1");
  check_finite(offset, path + ".offset");
  check_finite(scale, path + ".scale");
  check_finite(ramp_rate, path + ".ramp_rate");
  check_finite(random_lo, path + ".randomness");
  check_finite(random_hi, path + ".randomness");
  if (random_lo > random_hi) throw ValidationError(path + ".randomness: lo must be <= hi");
  if (base) check_finite(*base, path + ".base");
  if (pulse) {
    check_finite(pulse->magnitude, path + ".pulse.magnitude");
    if (pulse->every_n < 1) throw ValidationError(path + ".pulse.every_n: must be >= 1");
  }
  check_window(window, path);
}

double apply_fdi(double value, const FdiSpec& spec, FdiCounters& counters, double t_s, RngStream& rng) {
  if (!spec.window.contains(t_s)) return value;
  const double u = rng.uniform(spec.random_lo, spec.random_hi);
  const std::uint64_t index = counters.packets++;
  if (index % static_cast<std::uint64_t>(spec.interval) != 0) return value;
  ++counters.mutated;

  double v = spec.base.value_or(value);
  v += spec.ramp_rate * (t_s - spec.window.start_s);
  v *= spec.scale;
  v += spec.offset;
  v += u;
  if (spec.pulse && counters.mutated % static_cast<std::uint64_t>(spec.pulse->every_n) == 0) {
    v += spec.pulse->magnitude;
  }
  return v;
}

void ReplaySpec::validate(const std::string& path) const {
  if (!std::isfinite(start_s) || start_s < 0.0) throw ValidationError(path + ".start_s: must be >= 0");
  if (!(record_duration_s > 0.0)) throw ValidationError(path + ".record_duration_s: must be > 0");
  if (!(replay_duration_s > 0.0)) throw ValidationError(path + ".replay_duration_s: must be > 0");
}

ReplayPhase replay_phase(const ReplaySpec& spec, double t_s) {
  const double rec_end = spec.start_s + spec.record_duration_s;
  if (t_s >= spec.start_s && t_s < rec_end) return ReplayPhase::record;
  if (t_s >= rec_end && t_s < rec_end + spec.replay_duration_s) return ReplayPhase::replay;
  return ReplayPhase::passthrough;
}

double replay_step(double value, const ReplaySpec& spec, double t_s, ReplayState& state, bool* empty_buffer) {
  if (empty_buffer) *empty_buffer = false;
  switch (replay_phase(spec, t_s)) {
  case ReplayPhase::record:
    state.buffer.push_back(value);
    return value;
  case ReplayPhase::replay:
    if (state.buffer.empty()) {
      if (empty_buffer) *empty_buffer = true;
      return value;
    }
    return state.buffer[state.cursor++ % state.buffer.size()];
  case ReplayPhase::passthrough:
    break;
  }
  return value;
}

void LoadAlterSpec::validate(const std::string& path) const {
  if (interval < 1) throw ValidationError(path + ".interval: must be >= 1");
  check_finite(offset_mw, path + ".offset_mw");
  check_finite(random_lo, path + ".randomness_mw");
  check_finite(random_hi, path + ".randomness_mw");
  if (random_lo > random_hi) throw ValidationError(path + ".randomness_mw: lo must be <= hi");
  if (follow_battery) {
    check_finite(follow_battery->magnitude_mw, path + ".follow_battery.magnitude_mw");
    if (follow_battery->magnitude_mw < 0.0) {
      throw ValidationError(path + ".follow_battery.magnitude_mw: must be >= 0");
    }
  }
  check_window(window, path);
}

double apply_load_alteration(const LoadAlterSpec& spec, const SimClock& clock, double battery_power_mw,
                             RngStream& rng, LoadAlterState& state) {
  if (!spec.window.contains(clock.time_s())) {
    state.effect_mw = 0.0;
    return 0.0;
  }
  if (clock.tick % spec.interval == 0) {
    double effect = spec.offset_mw + rng.uniform(spec.random_lo, spec.random_hi);
    if (spec.follow_battery) {
      const double dir = spec.follow_battery->mode == FollowMode::reinforce ? -1.0 : 1.0;
      effect += dir * sign(battery_power_mw) * spec.follow_battery->magnitude_mw;
    }
    state.effect_mw = effect;
  }
  return state.effect_mw;
}

void TriggerRule::validate(const std::string& path) const {
  static const char* const kSignals[] = {"time_s", "true_f", "measured_f", "battery_power", "soc"};
  bool known = false;
  for (const char* s : kSignals) known = known || condition.signal == s;
  if (!known) throw ValidationError(path + ".condition.signal: unknown signal '" + condition.signal + "'");
  if (condition.op != ">" && condition.op != ">=" && condition.op != "<" && condition.op != "<=") {
    throw ValidationError(path + ".condition.op: must be one of > >= < <=");
  }
  check_finite(condition.value, path + ".condition.value");
  if (condition.deviation_from) check_finite(*condition.deviation_from, path + ".condition.deviation_from");
  if (!action.is_object() || action.empty()) throw ValidationError(path + ".action: must be a non-empty object");
}

std::vector<std::size_t> evaluate_triggers(const std::vector<TriggerRule>& rules,
                                           std::vector<TriggerState>& states, const TriggerSnapshot& snap) {
  states.resize(rules.size());
  std::vector<std::size_t> fired;
  for (std::size_t i = 0; i < rules.size(); ++i) {
    const auto& c = rules[i].condition;
    auto& st = states[i];
    std::optional<double> x;
    if (c.signal == "time_s") x = snap.time_s;
    else if (c.signal == "true_f") x = snap.true_f;
    else if (c.signal == "measured_f") x = snap.measured_f;
    else if (c.signal == "battery_power") x = snap.battery_power;
    else if (c.signal == "soc") x = snap.soc;

    bool holds = false;
    if (x) {
      const double v = c.deviation_from ? std::abs(*x - *c.deviation_from) : *x;
      if (c.op == ">") holds = v > c.value;
      else if (c.op == ">=") holds = v >= c.value;
      else if (c.op == "<") holds = v < c.value;
      else holds = v <= c.value;
    }

    bool fire = false;
    if (!st.disabled && holds) {
      switch (rules[i].mode) {
      case TriggerMode::once:
        fire = st.armed;
        if (fire) st.armed = false;
        break;
      case TriggerMode::latched:
        fire = !st.was_true;
        break;
      case TriggerMode::continuous:
        fire = true;
        break;
      }
    }
    st.was_true = holds;
    if (fire) {
      ++st.fired;
      fired.push_back(i);
    }
  }
  return fired;
}

std::string to_string(TriggerMode m) {
  switch (m) {
  case TriggerMode::once: return "once";
  case TriggerMode::latched: return "latched";
  case TriggerMode::continuous: return "continuous";
  }
  return "once";
}

std::string to_string(FollowMode m) { return m == FollowMode::reinforce ? "reinforce" : "oppose"; }

} // namespace bessim
