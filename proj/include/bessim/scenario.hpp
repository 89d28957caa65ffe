#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "bessim/attack.hpp"
#include "bessim/battery.hpp"
#include "bessim/controller.hpp"
#include "bessim/grid.hpp"
#include "bessim/link.hpp"

namespace bessim {

inline constexpr int kSchemaVersion = 1;

struct ClockConfig {
  int tick_hz = 50;
  double duration_s = 4920.0;
  bool operator==(const ClockConfig&) const = default;
};

enum class ConsumptionSource { synthetic, csv };

struct ConsumptionConfig {
  ConsumptionSource source = ConsumptionSource::synthetic;
  // synthetic, in MW after scaling
  double base_mw = 210.0;
  double drift_mw_per_min = -0.01;
  double noise_mw = 0.1;
  std::optional<int> minutes; ///< default: enough to cover the run
  // csv, raw values multiplied by grid.scale
  std::string path;
  std::optional<MinuteWindow> window;
  bool operator==(const ConsumptionConfig&) const = default;
};

struct GridConfig {
  ConsumptionConfig consumption;
  double scale = kDefaultConsumptionScale; ///< applies to CSV sources
  double noise_mw = 0.02;                  ///< per-tick uniform noise amplitude
  double consumption_floor_mw = kDefaultConsumptionFloorMw;
  bool operator==(const GridConfig&) const = default;
};

struct MeterConfig {
  Tick interval_ticks = 50;
  bool operator==(const MeterConfig&) const = default;
};

struct BatteryConfig {
  BatterySpec spec;
  Tick status_interval_ticks = 50;
  bool operator==(const BatteryConfig&) const = default;
};

struct ControllerConfig {
  double kp = 2.1;
  double ki = 1.5;
  double kd = 0.0;
  double setpoint_hz = 50.0;
  std::optional<double> output_limit_mw; ///< default: battery power rating
  double max_dt_s = 2.0;

  [[nodiscard]] PidConfig pid(const BatterySpec& battery) const;
  bool operator==(const ControllerConfig&) const = default;
};

struct AttacksConfig {
  std::optional<LoadAlterSpec> load_alter;
  std::vector<TriggerRule> triggers;
  bool operator==(const AttacksConfig&) const = default;
};

struct OutputsConfig {
  std::string dir = "out";
  int telemetry_decimation = 1;
  bool operator==(const OutputsConfig&) const = default;
};

struct ScenarioConfig {
  int schema_version = kSchemaVersion;
  std::string name;
  std::string description;
  std::uint64_t seed = 1;
  ClockConfig clock;
  GridConfig grid;
  MeterConfig meter;
  BatteryConfig battery;
  ControllerConfig controller;
  std::vector<LinkConfig> links; ///< always s2c, c2b, b2c-status in that order
  AttacksConfig attacks;
  OutputsConfig outputs;
  /// Directory relative CSV paths resolve against. Not serialized.
  std::filesystem::path base_dir;

  LinkConfig& link(std::string_view id);
  [[nodiscard]] const LinkConfig& link(std::string_view id) const;
  bool operator==(const ScenarioConfig&) const = default;
};

/// A default-valued config (synthetic consumption, no attacks).
ScenarioConfig default_scenario();

/// Strict reader: unknown keys, wrong types and out-of-range values raise
/// ValidationError naming the field path. Missing keys take defaults, except
/// grid.consumption.source which is required.
ScenarioConfig parse_scenario(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
ScenarioConfig parse_scenario_file(const std::filesystem::path& path);

/// Full document including defaults, in a fixed key order.
nlohmann::ordered_json scenario_to_json(const ScenarioConfig& cfg);

/// Semantic checks shared by the reader and live patches.
void validate_scenario(const ScenarioConfig& cfg);

/// FNV-1a over the canonical (sorted-key, compact) serialization without the
/// outputs block, as 16 hex digits.
std::string scenario_hash(const ScenarioConfig& cfg);

/// Turns {"a.b": 1} into {"a": {"b": 1}}, recursively.
nlohmann::json expand_dotted_keys(const nlohmann::json& patch);

/// RFC 7386 merge patch on the serialized scenario. Dotted keys are expanded
/// and `links` may be given as an object keyed by link_id. The result is
/// parsed and validated like a file.
ScenarioConfig apply_scenario_patch(const ScenarioConfig& cfg, const nlohmann::json& patch);

/// Merge patch for a single scalar field, e.g. "links.s2c.drop.drop_rate".
/// Throws ValidationError when the path does not name a scalar field.
nlohmann::json patch_for_parameter(const ScenarioConfig& cfg, const std::string& path, const nlohmann::json& value);

/// Builds the consumption series the run will use and checks it covers the
/// configured duration.
ConsumptionSeries build_consumption(const ScenarioConfig& cfg);

std::string to_string(ConsumptionSource s);

} // namespace bessim
