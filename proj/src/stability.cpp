#include "bessim/stability.hpp"

#include <algorithm>
#include <cmath>

#include "bessim/errors.hpp"

namespace bessim {

std::string to_string(Stability s) {
  switch (s) {
  case Stability::stable: return "stable";
  case Stability::oscillating: return "oscillating";
  case Stability::deviating: return "deviating";
  case Stability::steady_state_error: return "steady_state_error";
  }
  return "stable";
}

Stability stability_from_string(const std::string& s) {
  if (s == "stable") return Stability::stable;
  if (s == "oscillating") return Stability::oscillating;
  if (s == "deviating") return Stability::deviating;
  if (s == "steady_state_error") return Stability::steady_state_error;
  throw ValidationError("classification: unknown value '" + s + "'");
}

std::size_t settled_window_size(std::size_t n, int tick_hz, const ClassifierParams& p) {
  const auto frac = static_cast<std::size_t>(p.settled_fraction * static_cast<double>(n));
  const auto min_n = static_cast<std::size_t>(std::llround(p.min_window_s * tick_hz));
  return std::max(frac, min_n);
}

StabilityReport classify_stability(std::span<const double> f_hz, int tick_hz, const ClassifierParams& p) {
  if (tick_hz < 1) throw ValidationError("classify_stability: tick_hz must be >= 1");
  const std::size_t n = f_hz.size();
  const std::size_t w = settled_window_size(n, tick_hz, p);
  if (w < 2 || n < w) {
    throw ValidationError("classify_stability: series of " + std::to_string(n) +
                          " samples is shorter than the settled window (" + std::to_string(w) + ")");
  }
  const auto W = f_hz.subspan(n - w);

  StabilityReport r;
  r.window_samples = w;
  r.abnormal_share = abnormal_share(f_hz, p.abnormal_half_band, p.nominal_hz);

  double sum = 0.0;
  for (double x : W) sum += x;
  const double m = sum / static_cast<double>(w);
  const auto [lo, hi] = std::minmax_element(W.begin(), W.end());
  r.peak_to_peak_hz = *hi - *lo;

  // Least squares against t_i = i / tick_hz, centred so the fit is stable.
  const double t_mean = (static_cast<double>(w) - 1.0) / 2.0 / tick_hz;
  double sxx = 0.0, sxy = 0.0, ss = 0.0;
  for (std::size_t i = 0; i < w; ++i) {
    const double dt = static_cast<double>(i) / tick_hz - t_mean;
    const double df = W[i] - m;
    sxx += dt * dt;
    sxy += dt * df;
    ss += df * df;
    if (W[i] < p.band_lo || W[i] > p.band_hi) ++r.band_violations;
  }
  r.settled_mean_hz = m;
  r.settled_std_hz = std::sqrt(ss / static_cast<double>(w));
  r.slope_hz_per_s = sxx > 0.0 ? sxy / sxx : 0.0;
  r.fitted_end_hz = m + r.slope_hz_per_s * t_mean;

  const double h = p.osc_thresh * p.hysteresis_fraction;
  int state = 0;
  std::size_t active = 0;
  for (double x : W) {
    const double d = x - m;
    if (d > h) {
      if (state == -1) ++r.zero_crossings;
      state = 1;
    } else if (d < -h) {
      if (state == 1) ++r.zero_crossings;
      state = -1;
    }
    if (std::abs(d) > h) ++active;
  }
  r.activity = static_cast<double>(active) / static_cast<double>(w);

  const bool end_outside = r.fitted_end_hz < p.band_lo || r.fitted_end_hz > p.band_hi;
  if (std::abs(r.slope_hz_per_s) > p.slope_thresh && end_outside) {
    r.classification = Stability::deviating;
  } else if (r.peak_to_peak_hz > p.osc_thresh && r.zero_crossings > p.zc_thresh && r.activity >= p.min_activity) {
    r.classification = Stability::oscillating;
  } else if (r.settled_std_hz < p.sse_std && std::abs(m - p.nominal_hz) > p.sse_offset) {
    r.classification = Stability::steady_state_error;
  } else {
    r.classification = Stability::stable;
  }
  return r;
}

double abnormal_share(std::span<const double> f_hz, double half_band_hz, double nominal_hz) {
  if (f_hz.empty()) return 0.0;
  std::size_t k = 0;
  for (double x : f_hz) k += std::abs(x - nominal_hz) > half_band_hz;
  return static_cast<double>(k) / static_cast<double>(f_hz.size());
}

std::vector<double> window_peak_to_peak(std::span<const double> f_hz, std::size_t window) {
  if (window == 0) throw ValidationError("window_peak_to_peak: window must be >= 1");
  std::vector<double> out;
  for (std::size_t i = 0; i + window <= f_hz.size(); i += window) {
    const auto seg = f_hz.subspan(i, window);
    const auto [lo, hi] = std::minmax_element(seg.begin(), seg.end());
    out.push_back(*hi - *lo);
  }
  return out;
}

} // namespace bessim
