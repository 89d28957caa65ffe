#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace bessim {

enum class Stability { stable, oscillating, deviating, steady_state_error };

std::string to_string(Stability s);
Stability stability_from_string(const std::string& s);

/// Thresholds of the classifier. Frequencies in Hz, slopes in Hz/s.
struct ClassifierParams {
  double settled_fraction = 0.25; ///< settled window = trailing share of the run
  double min_window_s = 60.0;     ///< ... but never shorter than this
  double slope_thresh = 2e-4;
  double osc_thresh = 0.05;
  int zc_thresh = 10;
  double hysteresis_fraction = 0.5; ///< crossing hysteresis = osc_thresh * this
  double min_activity = 0.5;        ///< share of samples beyond the hysteresis
  double sse_std = 0.01;
  double sse_offset = 0.01;
  double nominal_hz = 50.0;
  double band_lo = 49.9;
  double band_hi = 50.1;
  double abnormal_half_band = 0.01;
};

struct StabilityReport {
  Stability classification = Stability::stable;
  double settled_mean_hz = 0.0;
  double settled_std_hz = 0.0;
  double peak_to_peak_hz = 0.0;
  double abnormal_share = 0.0;
  std::int64_t band_violations = 0; ///< settled-window samples outside the band

  // diagnostics
  double slope_hz_per_s = 0.0;
  double fitted_end_hz = 0.0;
  int zero_crossings = 0;
  double activity = 0.0;
  std::size_t window_samples = 0;
};

/// Number of trailing samples the classifier inspects.
std::size_t settled_window_size(std::size_t n, int tick_hz, const ClassifierParams& p);

/// Rules on the settled window W, first match wins:
///  deviating:  |LSQ slope| > slope_thresh and the fitted value at the end of W
///              lies outside the band;
///  oscillating: p2p > osc_thresh, more than zc_thresh hysteresis crossings of
///              the mean, and at least min_activity of W away from the mean;
///  steady_state_error: std < sse_std and |mean - nominal| > sse_offset;
///  stable otherwise.
/// Throws ValidationError when the series is shorter than the minimum window.
StabilityReport classify_stability(std::span<const double> f_hz, int tick_hz, const ClassifierParams& p = {});

/// Share of samples with |f - nominal| > half_band.
double abnormal_share(std::span<const double> f_hz, double half_band_hz = 0.01, double nominal_hz = 50.0);

/// Peak-to-peak of consecutive non-overlapping windows of `window` samples
/// (a trailing partial window is dropped).
std::vector<double> window_peak_to_peak(std::span<const double> f_hz, std::size_t window);

} // namespace bessim
