#include "bessim/grid.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>

#include "bessim/errors.hpp"

namespace bessim {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

template <class T>
T parse_number(std::string_view text, const std::string& where) {
  text = trim(text);
  T value{};
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw ValidationError(where + ": cannot parse '" + std::string(text) + "'");
  }
  return value;
}

} // namespace

double ConsumptionSeries::duration_s() const {
  if (samples.empty()) return 0.0;
  return static_cast<double>(samples.back().minute - samples.front().minute) * 60.0;
}

ConsumptionSeries load_consumption_csv(const std::filesystem::path& path, double scale,
                                       std::optional<MinuteWindow> window) {
  if (!(scale > 0.0)) throw ValidationError("grid.scale: must be > 0");
  std::ifstream in(path);
  if (!in) throw ValidationError("grid.consumption.path: cannot open " + path.string());

  std::string line;
  if (!std::getline(in, line)) throw ValidationError(path.string() + ": empty file");
  if (trim(line) != "minute,consumption_mw") {
    throw ValidationError(path.string() + ": expected header 'minute,consumption_mw'");
  }

  std::vector<ConsumptionSample> raw;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto comma = line.find(',');
    const std::string where = path.string() + ":" + std::to_string(line_no);
    if (comma == std::string::npos) throw ValidationError(where + ": expected two columns");
    const std::string_view view(line);
    ConsumptionSample s;
    s.minute = parse_number<int>(view.substr(0, comma), where);
    s.consumption_mw = parse_number<double>(view.substr(comma + 1), where);
    if (!raw.empty() && s.minute <= raw.back().minute) {
      throw ValidationError(where + ": minute indices must be strictly increasing");
    }
    if (s.consumption_mw < 0.0 || !std::isfinite(s.consumption_mw)) {
      throw ValidationError(where + ": negative or non-finite consumption");
    }
    raw.push_back(s);
  }
  if (raw.empty()) throw ValidationError(path.string() + ": no data rows");

  const MinuteWindow w = window.value_or(MinuteWindow{raw.front().minute, raw.back().minute});
  if (w.start_minute > w.end_minute || w.start_minute < raw.front().minute ||
      w.end_minute > raw.back().minute) {
    throw ValidationError("grid.consumption.window: outside series bounds");
  }

  ConsumptionSeries series;
  series.scale = scale;
  series.window = w;
  for (const auto& s : raw) {
    if (s.minute < w.start_minute || s.minute > w.end_minute) continue;
    const double mw = s.consumption_mw * scale;
    if (!(mw > 0.0)) throw ValidationError(path.string() + ": scaled consumption must be > 0");
    series.samples.push_back({s.minute - w.start_minute, mw});
  }
  if (series.samples.size() < 2) {
    throw ValidationError("grid.consumption.window: needs at least 2 rows");
  }
  return series;
}

ConsumptionSeries generate_synthetic_consumption(double base_mw, double drift_mw_per_min,
                                                 double noise_mw, int minutes, RngStream& rng) {
  if (!(base_mw > 0.0)) throw ValidationError("grid.consumption.base_mw: must be > 0");
  if (minutes < 2) throw ValidationError("grid.consumption.minutes: must be >= 2");
  if (noise_mw < 0.0) throw ValidationError("grid.consumption.noise_mw: must be >= 0");

  ConsumptionSeries series;
  series.window = {0, minutes - 1};
  series.samples.reserve(static_cast<std::size_t>(minutes));
  for (int k = 0; k < minutes; ++k) {
    const double jitter = rng.uniform(-noise_mw, noise_mw);
    const double mw = base_mw + k * drift_mw_per_min + jitter;
    if (!(mw > 0.0)) {
      throw ValidationError("grid.consumption: synthetic parameters produce non-positive consumption at minute " +
                            std::to_string(k));
    }
    series.samples.push_back({k, mw});
  }
  return series;
}

double consumption_at(const ConsumptionSeries& series, double time_s) {
  const auto& s = series.samples;
  if (s.empty()) throw RuntimeError("consumption series is empty");
  if (time_s < 0.0 || time_s > series.duration_s()) {
    throw RuntimeError("consumption_at: t=" + std::to_string(time_s) + " s outside series window");
  }
  const double minute = time_s / 60.0 + s.front().minute;
  // first sample with minute index > t
  auto hi = std::upper_bound(s.begin(), s.end(), minute,
                             [](double m, const ConsumptionSample& x) { return m < x.minute; });
  if (hi == s.end()) return s.back().consumption_mw;
  auto lo = std::prev(hi);
  const double span = hi->minute - lo->minute;
  const double frac = (minute - lo->minute) / span;
  return lo->consumption_mw + (hi->consumption_mw - lo->consumption_mw) * frac;
}

double compute_frequency(double production_mw, double consumption_mw, double floor_mw, bool* clamped) {
  const bool below = consumption_mw < floor_mw;
  if (clamped) *clamped = below;
  const double c = below ? floor_mw : consumption_mw;
  return production_mw / c * kNominalHz;
}

GridModel::GridModel(ConsumptionSeries series, GridParams params)
    : series_(std::move(series)), params_(params) {
  if (series_.samples.size() < 2) throw ValidationError("grid.consumption: needs at least 2 samples");
  state_.production_base_mw = consumption_at(series_, 0.0);
  state_.consumption_mw = state_.production_base_mw;
}

bool GridModel::step(double time_s, double la_effect_mw, double battery_power_mw, RngStream& noise) {
  const double jitter = noise.uniform(-params_.noise_mw, params_.noise_mw);
  double consumption = consumption_at(series_, time_s) + jitter + la_effect_mw;
  bool clamped = false;
  state_.battery_power_mw = battery_power_mw;
  state_.frequency_hz =
      compute_frequency(state_.production_mw(), consumption, params_.consumption_floor_mw, &clamped);
  if (clamped) consumption = params_.consumption_floor_mw;
  state_.consumption_mw = consumption;
  return clamped;
}

} // namespace bessim
