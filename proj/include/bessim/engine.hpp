#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include <json.hpp>

#include "bessim/battery.hpp"
#include "bessim/clock.hpp"
#include "bessim/controller.hpp"
#include "bessim/grid.hpp"
#include "bessim/link.hpp"
#include "bessim/meter.hpp"
#include "bessim/scenario.hpp"
#include "bessim/telemetry.hpp"

namespace bessim {

enum class CommandKind { pause, resume, reset, set_speed, patch_attack, patch_scenario, stop };

std::string to_string(CommandKind k);
CommandKind command_kind_from_string(const std::string& s);

struct EngineCommand {
  CommandKind kind = CommandKind::pause;
  /// set_speed: number; patch_attack: partial link (or load_alter) spec;
  /// patch_scenario: merge patch on the scenario. Dotted keys are allowed.
  nlohmann::json payload;
  /// patch_attack target: s2c, c2b, b2c-status or load_alter.
  std::string target;
  std::chrono::system_clock::time_point issued_at = std::chrono::system_clock::now();
};

struct CommandAck {
  bool accepted = false;
  bool conflict = false; ///< engine already stopped
  std::string error;
  Tick effective_tick = 0;
  nlohmann::json effective_spec;
};

enum class RunState { running, paused, stopped, finished };
std::string to_string(RunState s);

enum class StepOutcome { advanced, paused, stopped, finished };

struct Event {
  Tick tick = 0;
  std::string kind;
  std::string message;
};

/// Throws ValidationError if `after` changes a field that only takes effect
/// at construction (seed, clock, consumption, battery sizing).
void check_runtime_patchable(const ScenarioConfig& before, const ScenarioConfig& after);

/// Tick-driven co-simulation of grid, meter, controller, links and battery.
///
/// Per tick: (1) queued commands and trigger patches, (2) load altering and
/// grid step, (3) meter sample onto s2c, (4) deliveries on s2c, c2b and the
/// status link, (5) controller updates in arrival order, sending on c2b,
/// (6) battery actuation and status emission, (7) telemetry and triggers.
///
/// step() and the accessors belong to one thread. enqueue(),
/// projected_config(), published_tick() and run_state() may be called from
/// any thread.
class Engine {
public:
  explicit Engine(ScenarioConfig cfg, bool start_paused = false);
  ~Engine();
  Engine(const Engine&) = delete;
  Engine& operator=(const Engine&) = delete;

  /// Validates against the config as it will be once every queued command has
  /// applied, then queues. Rejected commands leave no trace.
  CommandAck enqueue(EngineCommand cmd);

  StepOutcome step();
  /// Steps until `ticks` ticks have advanced or the engine pauses, stops or
  /// finishes. Returns the number of ticks advanced.
  Tick run_ticks(Tick ticks);
  Tick run(double duration_s);
  Tick run_to_end();

  [[nodiscard]] Tick tick() const;
  [[nodiscard]] Tick total_ticks() const { return total_ticks_; }
  [[nodiscard]] int tick_hz() const { return original_.clock.tick_hz; }
  [[nodiscard]] const std::vector<TelemetryRecord>& telemetry() const;
  [[nodiscard]] const std::vector<Event>& events() const { return events_; }
  [[nodiscard]] std::uint64_t event_count(const std::string& kind) const;
  [[nodiscard]] const ScenarioConfig& config() const { return cfg_; }
  [[nodiscard]] const ScenarioConfig& original_config() const { return original_; }
  [[nodiscard]] ScenarioConfig projected_config() const;
  [[nodiscard]] RunState run_state() const { return state_.load(); }
  [[nodiscard]] Tick published_tick() const { return published_tick_.load(); }
  [[nodiscard]] double speed() const { return speed_.load(); }
  /// Bumped whenever the live config changes (patch or reset).
  [[nodiscard]] std::uint64_t config_version() const { return config_version_; }

  [[nodiscard]] const GridModel& grid() const;
  [[nodiscard]] const BatteryManagementSystem& bms() const;
  [[nodiscard]] const CloudController& controller() const;
  [[nodiscard]] const NetLink<MeasurementPacket>& s2c() const;
  [[nodiscard]] const NetLink<ControlPacket>& c2b() const;
  [[nodiscard]] const NetLink<StatusPacket>& status_link() const;

  /// Current attack configuration: each link plus load_alter.
  [[nodiscard]] nlohmann::json attack_specs() const;

  struct World;

private:
  void apply_commands_locked();
  void apply_config(const ScenarioConfig& next);
  void log_event(std::string kind, std::string message);
  CommandAck enqueue_locked(EngineCommand cmd);

  ScenarioConfig original_;
  ScenarioConfig cfg_;
  Tick total_ticks_;
  std::unique_ptr<World> world_;
  std::vector<Event> events_;
  std::map<std::string, std::uint64_t> event_counts_;
  std::uint64_t config_version_ = 0;

  mutable std::mutex mu_;
  std::deque<EngineCommand> queue_;
  ScenarioConfig projected_;
  bool stop_queued_ = false;
  Tick next_apply_tick_ = 0;

  std::atomic<RunState> state_;
  std::atomic<Tick> published_tick_{0};
  std::atomic<double> speed_{1.0};
};

} // namespace bessim
