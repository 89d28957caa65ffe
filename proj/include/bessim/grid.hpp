#pragma once

#include <filesystem>
#include <optional>
#include <vector>

#include "bessim/rng.hpp"

namespace bessim {

inline constexpr double kNominalHz = 50.0;
inline constexpr double kDefaultConsumptionScale = 0.02;
inline constexpr double kDefaultConsumptionFloorMw = 1.0;

struct ConsumptionSample {
  int minute = 0;
  double consumption_mw = 0.0;
  bool operator==(const ConsumptionSample&) const = default;
};

/// Inclusive minute range [start_minute, end_minute] of the source data.
struct MinuteWindow {
  int start_minute = 0;
  int end_minute = 0;
  bool operator==(const MinuteWindow&) const = default;
};

/// Minute-wise consumption, already scaled and re-based so the first retained
/// sample is minute 0.
struct ConsumptionSeries {
  std::vector<ConsumptionSample> samples;
  double scale = 1.0;
  MinuteWindow window;

  /// Span covered by the samples, in seconds.
  [[nodiscard]] double duration_s() const;
};

/// Reads a `minute,consumption_mw` CSV, slices the window and applies `scale`.
ConsumptionSeries load_consumption_csv(const std::filesystem::path& path, double scale,
                                       std::optional<MinuteWindow> window = std::nullopt);

/// samples[k] = base + k * drift + U(-noise, +noise), drawn from `rng`.
ConsumptionSeries generate_synthetic_consumption(double base_mw, double drift_mw_per_min,
                                                 double noise_mw, int minutes, RngStream& rng);

/// Linear interpolation between minute samples. Throws outside [0, duration].
double consumption_at(const ConsumptionSeries& series, double time_s);

/// Frequency from the production/consumption ratio around 50 Hz. Consumption
/// below `floor_mw` is clamped to the floor; `clamped` reports when that happens.
double compute_frequency(double production_mw, double consumption_mw,
                         double floor_mw = kDefaultConsumptionFloorMw, bool* clamped = nullptr);

struct GridState {
  double consumption_mw = 0.0;
  double production_base_mw = 0.0;
  double battery_power_mw = 0.0; ///< positive = injecting into the grid
  double frequency_hz = kNominalHz;

  [[nodiscard]] double production_mw() const { return production_base_mw + battery_power_mw; }
};

struct GridParams {
  double noise_mw = 0.0;
  double consumption_floor_mw = kDefaultConsumptionFloorMw;
};

/// Grid federate. Production is a constant baseline fixed at the noise-free
/// consumption at t = 0, so an undisturbed run starts at exactly 50 Hz and the
/// battery is the only balancing actor.
class GridModel {
public:
  GridModel(ConsumptionSeries series, GridParams params);

  /// Advances to `time_s`: consumption = interpolant + noise + la_effect, then
  /// frequency from production_base + battery power. Returns true if the
  /// consumption floor had to be applied.
  bool step(double time_s, double la_effect_mw, double battery_power_mw, RngStream& noise);

  void set_params(GridParams params) { params_ = params; }
  [[nodiscard]] const GridParams& params() const { return params_; }
  [[nodiscard]] const GridState& state() const { return state_; }
  [[nodiscard]] const ConsumptionSeries& series() const { return series_; }

private:
  ConsumptionSeries series_;
  GridParams params_;
  GridState state_;
};

} // namespace bessim
