#include "bessim/engine.hpp"

#include <cmath>

#include "bessim/errors.hpp"

namespace bessim {

using nlohmann::json;

namespace {
constexpr std::size_t kMaxEvents = 200000;
}

std::string to_string(CommandKind k) {
  switch (k) {
  case CommandKind::pause: return "pause";
  case CommandKind::resume: return "resume";
  case CommandKind::reset: return "reset";
  case CommandKind::set_speed: return "set_speed";
  case CommandKind::patch_attack: return "patch_attack";
  case CommandKind::patch_scenario: return "patch_scenario";
  case CommandKind::stop: return "stop";
  }
  return "pause";
}

CommandKind command_kind_from_string(const std::string& s) {
  for (auto k : {CommandKind::pause, CommandKind::resume, CommandKind::reset, CommandKind::set_speed,
                 CommandKind::patch_attack, CommandKind::patch_scenario, CommandKind::stop}) {
    if (to_string(k) == s) return k;
  }
  throw ValidationError("command: unknown kind '" + s + "'");
}

std::string to_string(RunState s) {
  switch (s) {
  case RunState::running: return "running";
  case RunState::paused: return "paused";
  case RunState::stopped: return "stopped";
  case RunState::finished: return "finished";
  }
  return "paused";
}

void check_runtime_patchable(const ScenarioConfig& before, const ScenarioConfig& after) {
  auto reject = [](const char* field) {
    throw ValidationError(std::string(field) + ": cannot be changed on a live engine");
  };
  if (after.schema_version != before.schema_version) reject("schema_version");
  if (after.seed != before.seed) reject("seed");
  if (after.clock != before.clock) reject("clock");
  if (after.grid.consumption != before.grid.consumption) reject("grid.consumption");
  if (after.grid.scale != before.grid.scale) reject("grid.scale");
  if (after.battery.spec != before.battery.spec) reject("battery");
}

struct Engine::World {
  SimClock clock;
  GridModel grid;
  FrequencyMeter meter;
  CloudController controller;
  BatteryManagementSystem bms;
  NetLink<MeasurementPacket> s2c;
  NetLink<ControlPacket> c2b;
  NetLink<StatusPacket> status;
  RngStream noise;
  RngStream la_rng;
  LoadAlterState la_state;
  std::vector<TriggerState> triggers;
  std::vector<TelemetryRecord> log;
  bool rating_clamped = false;
  bool soc_clamped = false;

  explicit World(const ScenarioConfig& c)
      : clock{0, c.clock.tick_hz},
        grid(build_consumption(c), GridParams{c.grid.noise_mw, c.grid.consumption_floor_mw}),
        meter(c.meter.interval_ticks), controller(c.controller.pid(c.battery.spec)),
        bms(0, c.battery.spec, c.battery.status_interval_ticks), s2c(c.link(link_ids::s2c), c.seed, c.clock.tick_hz),
        c2b(c.link(link_ids::c2b), c.seed, c.clock.tick_hz),
        status(c.link(link_ids::b2c_status), c.seed, c.clock.tick_hz), noise(c.seed, streams::consumption_noise),
        la_rng(c.seed, streams::la_random), triggers(c.attacks.triggers.size()) {
    log.reserve(static_cast<std::size_t>(std::llround(c.clock.duration_s * c.clock.tick_hz)));
  }
};

Engine::Engine(ScenarioConfig cfg, bool start_paused)
    : original_(std::move(cfg)), cfg_(original_), projected_(original_),
      state_(start_paused ? RunState::paused : RunState::running) {
  validate_scenario(original_);
  total_ticks_ = std::llround(original_.clock.duration_s * original_.clock.tick_hz);
  world_ = std::make_unique<World>(original_);
}

Engine::~Engine() = default;

Tick Engine::tick() const { return world_->clock.tick; }
const std::vector<TelemetryRecord>& Engine::telemetry() const { return world_->log; }
const GridModel& Engine::grid() const { return world_->grid; }
const BatteryManagementSystem& Engine::bms() const { return world_->bms; }
const CloudController& Engine::controller() const { return world_->controller; }
const NetLink<MeasurementPacket>& Engine::s2c() const { return world_->s2c; }
const NetLink<ControlPacket>& Engine::c2b() const { return world_->c2b; }
const NetLink<StatusPacket>& Engine::status_link() const { return world_->status; }

ScenarioConfig Engine::projected_config() const {
  std::lock_guard lock(mu_);
  return projected_;
}

std::uint64_t Engine::event_count(const std::string& kind) const {
  auto it = event_counts_.find(kind);
  return it == event_counts_.end() ? 0 : it->second;
}

json Engine::attack_specs() const {
  const json full = json::parse(scenario_to_json(cfg_).dump());
  json out = json::object();
  for (const auto& l : full["links"]) out[l["link_id"].get<std::string>()] = l;
  out["load_alter"] = full["attacks"]["load_alter"];
  return out;
}

void Engine::log_event(std::string kind, std::string message) {
  ++event_counts_[kind];
  if (events_.size() < kMaxEvents) events_.push_back({world_->clock.tick, std::move(kind), std::move(message)});
}

CommandAck Engine::enqueue(EngineCommand cmd) {
  std::lock_guard lock(mu_);
  return enqueue_locked(std::move(cmd));
}

CommandAck Engine::enqueue_locked(EngineCommand cmd) {
  CommandAck ack;
  ack.effective_tick = next_apply_tick_;
  const RunState st = state_.load();
  if (st == RunState::stopped || stop_queued_) {
    ack.conflict = true;
    ack.error = "engine is stopped";
    return ack;
  }
  try {
    switch (cmd.kind) {
    case CommandKind::pause:
    case CommandKind::resume:
      break;
    case CommandKind::stop:
      stop_queued_ = true;
      break;
    case CommandKind::reset:
      projected_ = original_;
      ack.effective_spec = json::parse(scenario_to_json(projected_).dump());
      break;
    case CommandKind::set_speed: {
      if (!cmd.payload.is_number()) throw ValidationError("value: speed must be a number");
      const double v = cmd.payload.get<double>();
      if (!(v > 0.0) || !std::isfinite(v)) throw ValidationError("value: speed must be > 0");
      ack.effective_spec = v;
      break;
    }
    case CommandKind::patch_attack: {
      if (!cmd.payload.is_object()) throw ValidationError("patch: expected object");
      json patch;
      if (cmd.target == "load_alter") {
        patch["attacks"]["load_alter"] = cmd.payload;
      } else if (is_known_link(cmd.target)) {
        patch["links"][cmd.target] = cmd.payload;
      } else {
        throw ValidationError("link_id: unknown target '" + cmd.target + "'");
      }
      ScenarioConfig next = apply_scenario_patch(projected_, patch);
      check_runtime_patchable(projected_, next);
      projected_ = std::move(next);
      const json full = json::parse(scenario_to_json(projected_).dump());
      if (cmd.target == "load_alter") {
        ack.effective_spec = full["attacks"]["load_alter"];
      } else {
        for (const auto& l : full["links"]) {
          if (l["link_id"] == cmd.target) ack.effective_spec = l;
        }
      }
      cmd.payload = patch;
      break;
    }
    case CommandKind::patch_scenario: {
      ScenarioConfig next = apply_scenario_patch(projected_, cmd.payload);
      check_runtime_patchable(projected_, next);
      projected_ = std::move(next);
      ack.effective_spec = json::parse(scenario_to_json(projected_).dump());
      break;
    }
    }
  } catch (const ValidationError& e) {
    ack.error = e.what();
    return ack;
  }
  ack.accepted = true;
  queue_.push_back(std::move(cmd));
  return ack;
}

void Engine::apply_config(const ScenarioConfig& next) {
  auto& w = *world_;
  w.grid.set_params(GridParams{next.grid.noise_mw, next.grid.consumption_floor_mw});
  w.meter.set_interval(next.meter.interval_ticks);
  w.bms.set_status_interval(next.battery.status_interval_ticks);
  w.controller.set_config(next.controller.pid(next.battery.spec));
  w.s2c.reconfigure(next.link(link_ids::s2c));
  w.c2b.reconfigure(next.link(link_ids::c2b));
  w.status.reconfigure(next.link(link_ids::b2c_status));
  if (next.attacks.triggers != cfg_.attacks.triggers) {
    w.triggers.assign(next.attacks.triggers.size(), TriggerState{});
  }
  cfg_ = next;
  ++config_version_;
}

void Engine::apply_commands_locked() {
  while (!queue_.empty()) {
    EngineCommand cmd = std::move(queue_.front());
    queue_.pop_front();
    switch (cmd.kind) {
    case CommandKind::pause:
      if (state_ == RunState::running) state_ = RunState::paused;
      break;
    case CommandKind::resume:
      if (state_ == RunState::paused) state_ = RunState::running;
      break;
    case CommandKind::stop:
      state_ = RunState::stopped;
      break;
    case CommandKind::set_speed:
      speed_ = cmd.payload.get<double>();
      break;
    case CommandKind::reset:
      world_ = std::make_unique<World>(original_);
      cfg_ = original_;
      ++config_version_;
      events_.clear();
      event_counts_.clear();
      if (state_ == RunState::finished) state_ = RunState::running;
      log_event("reset", "state cleared to tick 0");
      break;
    case CommandKind::patch_attack:
    case CommandKind::patch_scenario:
      try {
        ScenarioConfig next = apply_scenario_patch(cfg_, cmd.payload);
        check_runtime_patchable(cfg_, next);
        apply_config(next);
        log_event("patch", cmd.payload.dump());
      } catch (const std::exception& e) {
        log_event("patch_failed", e.what());
      }
      break;
    }
  }
}

StepOutcome Engine::step() {
  {
    std::lock_guard lock(mu_);
    apply_commands_locked();
    const Tick now = world_->clock.tick;
    if (state_ == RunState::running && now >= total_ticks_) state_ = RunState::finished;
    next_apply_tick_ = now + (state_ == RunState::running ? 1 : 0);
  }
  switch (state_.load()) {
  case RunState::stopped: return StepOutcome::stopped;
  case RunState::paused: return StepOutcome::paused;
  case RunState::finished: return StepOutcome::finished;
  case RunState::running: break;
  }
  World& W = *world_;
  SimClock& clock = W.clock;
  const double t = clock.time_s();

  // (2) load altering and grid
  double la = 0.0;
  if (cfg_.attacks.load_alter) {
    la = apply_load_alteration(*cfg_.attacks.load_alter, clock, W.bms.state().delivered_power_mw, W.la_rng,
                               W.la_state);
  } else {
    W.la_state.effect_mw = 0.0;
  }
  if (W.grid.step(t, la, W.bms.state().delivered_power_mw, W.noise)) {
    log_event("consumption_floor", "consumption clamped to " + format_double(cfg_.grid.consumption_floor_mw) + " MW");
  }

  // (3) meter
  if (auto pkt = W.meter.maybe_sample(clock, W.grid.state())) {
    const auto r = W.s2c.transmit(*pkt, clock);
    if (r.dropped) log_event("drop", "s2c origin_seq " + std::to_string(r.origin_seq));
    else if (r.mutated) log_event("mutate", "s2c " + format_double(r.before) + " -> " + format_double(r.after));
    if (r.replay_empty) log_event("replay_empty", "s2c replay buffer empty, passing through");
  }

  // (4) deliveries
  auto measurements = W.s2c.deliver_due(clock.tick);
  for (const auto& c : W.c2b.deliver_due(clock.tick)) W.bms.receive(c);
  for (const auto& s : W.status.deliver_due(clock.tick)) W.controller.on_status(s);

  // (5) controller
  const std::vector<double> headroom{W.bms.headroom_mw()};
  for (const auto& m : measurements) {
    auto out = W.controller.on_measurement(m, clock, headroom);
    if (out.rejected_payload) log_event("nonfinite_measurement", "seq " + std::to_string(m.seq) + ", sent 0 MW");
    if (out.starved) log_event("dispatch_starved", "no BMS headroom");
    for (auto& p : out.packets) {
      const auto r = W.c2b.transmit(p, clock);
      if (r.dropped) log_event("drop", "c2b origin_seq " + std::to_string(r.origin_seq));
      else if (r.mutated) log_event("mutate", "c2b " + format_double(r.before) + " -> " + format_double(r.after));
      if (r.replay_empty) log_event("replay_empty", "c2b replay buffer empty, passing through");
    }
  }

  // (6) battery
  const auto act = W.bms.step(clock.dt_s());
  if (act.rating_clamped && !W.rating_clamped) log_event("rating_clamp", "command beyond power rating");
  if (act.soc_clamped && !W.soc_clamped) log_event("soc_clamp", "power curtailed at SoC bound");
  W.rating_clamped = act.rating_clamped;
  W.soc_clamped = act.soc_clamped;
  if (auto st = W.bms.emit_status(clock)) {
    const auto r = W.status.transmit(*st, clock);
    if (r.dropped) log_event("drop", "b2c-status origin_seq " + std::to_string(r.origin_seq));
  }

  // (7) telemetry and triggers
  TelemetryRecord rec;
  rec.tick = clock.tick;
  rec.time_s = t;
  rec.consumption_mw = W.grid.state().consumption_mw;
  rec.production_mw = W.grid.state().production_mw();
  rec.true_f_hz = W.grid.state().frequency_hz;
  rec.measured_f_hz = W.controller.last_measurement();
  rec.command_mw = W.controller.last_command();
  rec.delivered_mw = W.bms.state().delivered_power_mw;
  rec.soc_mwh = W.bms.state().soc_mwh;
  rec.attacks = W.s2c.active_flags(t) << attack_bits::kS2cShift | W.c2b.active_flags(t) << attack_bits::kC2bShift |
                W.status.active_flags(t) << attack_bits::kStatusShift;
  if (cfg_.attacks.load_alter && cfg_.attacks.load_alter->window.contains(t)) rec.attacks |= attack_bits::kLoadAlter;
  W.log.push_back(rec);

  if (!cfg_.attacks.triggers.empty()) {
    TriggerSnapshot snap{t, rec.true_f_hz, rec.measured_f_hz, rec.delivered_mw, rec.soc_mwh};
    const auto fired = evaluate_triggers(cfg_.attacks.triggers, W.triggers, snap);
    for (std::size_t idx : fired) {
      const auto& rule = cfg_.attacks.triggers[idx];
      EngineCommand cmd{CommandKind::patch_scenario, rule.action, {}, std::chrono::system_clock::now()};
      CommandAck ack;
      {
        std::lock_guard lock(mu_);
        ack = enqueue_locked(std::move(cmd));
      }
      const std::string label = rule.name.empty() ? "#" + std::to_string(idx) : rule.name;
      if (ack.accepted) {
        log_event("trigger", "rule " + label + " fired");
      } else {
        W.triggers[idx].disabled = true;
        log_event("trigger_error", "rule " + label + " disabled: " + ack.error);
      }
    }
  }

  clock.advance();
  published_tick_ = clock.tick;
  return StepOutcome::advanced;
}

Tick Engine::run_ticks(Tick ticks) {
  Tick done = 0;
  while (done < ticks) {
    if (step() != StepOutcome::advanced) break;
    ++done;
  }
  return done;
}

Tick Engine::run(double duration_s) {
  if (!(duration_s > 0.0)) throw ValidationError("run: duration_s must be > 0");
  return run_ticks(std::llround(duration_s * tick_hz()));
}

Tick Engine::run_to_end() { return run_ticks(total_ticks_ - tick()); }

} // namespace bessim
