#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "bessim/clock.hpp"
#include "bessim/stability.hpp"

namespace bessim {

/// Active-attack bits in a record: four AttackFlag bits per link (s2c, c2b,
/// b2c-status, in that order), then one bit for load altering.
namespace attack_bits {
inline constexpr int kS2cShift = 0;
inline constexpr int kC2bShift = 4;
inline constexpr int kStatusShift = 8;
inline constexpr std::uint32_t kLoadAlter = 1u << 12;
} // namespace attack_bits

/// Renders attack bits as e.g. "s2c.delay+c2b.fdi+la"; empty when none.
std::string attack_flags_to_string(std::uint32_t bits);

struct TelemetryRecord {
  Tick tick = 0;
  double time_s = 0.0;
  double consumption_mw = 0.0;
  double production_mw = 0.0;
  double true_f_hz = 0.0;
  std::optional<double> measured_f_hz; ///< last value the controller received
  double command_mw = 0.0;             ///< last command the controller emitted
  double delivered_mw = 0.0;           ///< battery output actuated this tick
  double soc_mwh = 0.0;
  std::uint32_t attacks = 0;
};

inline constexpr const char* kTelemetryHeader =
    "tick,time_s,consumption_mw,production_mw,true_f_hz,measured_f_hz,command_mw,delivered_mw,soc_mwh,attacks";

/// Shortest round-trip decimal form.
std::string format_double(double v);

void write_telemetry_row(std::ostream& out, const TelemetryRecord& r);
/// Header plus every `decimation`-th record.
void write_telemetry_csv(std::ostream& out, const std::vector<TelemetryRecord>& log, int decimation = 1);
void write_telemetry_csv(const std::filesystem::path& path, const std::vector<TelemetryRecord>& log,
                         int decimation = 1);

nlohmann::json record_to_json(const TelemetryRecord& r);

struct RunReport {
  StabilityReport stability;
  std::uint64_t seed = 0;
  std::string scenario_hash;
};

/// Report keys in fixed order: classification, settled_mean_hz,
/// settled_std_hz, peak_to_peak_hz, abnormal_share, band_violations, seed,
/// scenario_hash.
nlohmann::ordered_json report_to_json(const RunReport& r);
RunReport report_from_json(const nlohmann::json& j);
void write_report_json(const std::filesystem::path& path, const RunReport& r);

std::vector<double> true_frequency(const std::vector<TelemetryRecord>& log);

} // namespace bessim
