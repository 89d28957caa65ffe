#pragma once

#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "bessim/scenario.hpp"
#include "bessim/stability.hpp"
#include "bessim/telemetry.hpp"

namespace bessim {

struct HeadlessOptions {
  std::optional<std::uint64_t> seed;       ///< overrides the scenario seed
  std::optional<std::filesystem::path> out_dir; ///< overrides outputs.dir
  bool write_files = true;
  bool keep_telemetry = true;
  ClassifierParams classifier;
};

struct RunResult {
  RunReport report;
  std::vector<TelemetryRecord> telemetry;
  Tick ticks = 0;
  std::filesystem::path telemetry_path;
  std::filesystem::path report_path;
};

/// Report over the true frequency of a complete log.
RunReport make_report(const std::vector<TelemetryRecord>& log, const ScenarioConfig& cfg,
                      const ClassifierParams& params = {});

/// Runs the scenario to its duration and, unless disabled, writes
/// telemetry.csv and report.json to the output directory.
RunResult run_headless(ScenarioConfig cfg, const HeadlessOptions& opts = {});

struct SweepRow {
  nlohmann::json value;
  RunReport report;
};

/// One isolated run per value with `parameter_path` patched in. Runs execute
/// on up to `threads` workers; rows come back in value order.
std::vector<SweepRow> sweep(const ScenarioConfig& cfg, const std::string& parameter_path,
                            const std::vector<nlohmann::json>& values, unsigned threads = 0,
                            const ClassifierParams& classifier = {});

/// Summary CSV: value,classification,abnormal_share,settled_mean_hz,
/// settled_std_hz,peak_to_peak_hz,band_violations.
void write_sweep_table(std::ostream& out, const std::vector<SweepRow>& rows);

/// Parses "0,0.1,0.2" or "0:1:0.1" (start:stop:step, inclusive) into numbers.
std::vector<nlohmann::json> parse_value_list(const std::string& text);

struct CalibrationCandidate {
  double kp = 0.0;
  double ki = 0.0;
  double itae = 0.0;         ///< on the attack-free scenario
  bool baseline_in_band = false;
  bool delay_oscillates = false; ///< constant 4 s delay on s2c
  bool drop_contained = false;   ///< drop rate 0.7 on s2c stays in the band
  [[nodiscard]] bool feasible() const { return baseline_in_band && delay_oscillates && drop_contained; }
};

/// Grid search over (kp, ki) minimising ITAE of the attack-free run subject to
/// band containment, oscillation under a 4 s delay and containment at drop
/// rate 0.7. Returned in grid order; pick with best_candidate().
std::vector<CalibrationCandidate> calibrate(const ScenarioConfig& baseline, const std::vector<double>& kp_values,
                                            const std::vector<double>& ki_values, double constraint_duration_s = 1200.0,
                                            unsigned threads = 0);
std::optional<CalibrationCandidate> best_candidate(const std::vector<CalibrationCandidate>& c);

} // namespace bessim
