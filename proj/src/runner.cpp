#include "bessim/runner.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include "bessim/engine.hpp"
#include "bessim/errors.hpp"

namespace bessim {

using nlohmann::json;

namespace {

template <class F>
void parallel_for(std::size_t n, unsigned threads, F&& fn) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, n));
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mu;
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(error_mu);
        if (!error) error = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

} // namespace

RunReport make_report(const std::vector<TelemetryRecord>& log, const ScenarioConfig& cfg,
                      const ClassifierParams& params) {
  RunReport r;
  const auto f = true_frequency(log);
  r.stability = classify_stability(f, cfg.clock.tick_hz, params);
  r.seed = cfg.seed;
  r.scenario_hash = scenario_hash(cfg);
  return r;
}

RunResult run_headless(ScenarioConfig cfg, const HeadlessOptions& opts) {
  if (opts.seed) cfg.seed = *opts.seed;
  if (opts.out_dir) cfg.outputs.dir = opts.out_dir->string();
  validate_scenario(cfg);

  Engine engine(cfg);
  RunResult result;
  result.ticks = engine.run_to_end();
  if (result.ticks != engine.total_ticks()) throw RuntimeError("run ended early at tick " + std::to_string(result.ticks));
  result.report = make_report(engine.telemetry(), cfg, opts.classifier);

  if (opts.write_files) {
    std::filesystem::path dir(cfg.outputs.dir);
    if (dir.is_relative() && !opts.out_dir && !cfg.base_dir.empty()) dir = cfg.base_dir / dir;
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw RuntimeError("cannot create output directory " + dir.string() + ": " + ec.message());
    result.telemetry_path = dir / "telemetry.csv";
    result.report_path = dir / "report.json";
    write_telemetry_csv(result.telemetry_path, engine.telemetry(), cfg.outputs.telemetry_decimation);
    write_report_json(result.report_path, result.report);
  }
  if (opts.keep_telemetry) result.telemetry = engine.telemetry();
  return result;
}

std::vector<SweepRow> sweep(const ScenarioConfig& cfg, const std::string& parameter_path,
                            const std::vector<json>& values, unsigned threads, const ClassifierParams& classifier) {
  if (values.empty()) throw ValidationError("sweep: no values given");
  std::vector<ScenarioConfig> configs;
  configs.reserve(values.size());
  for (const auto& v : values) {
    configs.push_back(apply_scenario_patch(cfg, patch_for_parameter(cfg, parameter_path, v)));
  }
  std::vector<SweepRow> rows(values.size());
  parallel_for(values.size(), threads, [&](std::size_t i) {
    HeadlessOptions opts;
    opts.write_files = false;
    opts.keep_telemetry = false;
    opts.classifier = classifier;
    rows[i] = SweepRow{values[i], run_headless(configs[i], opts).report};
  });
  return rows;
}

void write_sweep_table(std::ostream& out, const std::vector<SweepRow>& rows) {
  out << "value,classification,abnormal_share,settled_mean_hz,settled_std_hz,peak_to_peak_hz,band_violations\n";
  for (const auto& r : rows) {
    const auto& s = r.report.stability;
    out << (r.value.is_number_float() ? format_double(r.value.get<double>()) : r.value.dump()) << ','
        << to_string(s.classification) << ',' << format_double(s.abnormal_share) << ','
        << format_double(s.settled_mean_hz) << ',' << format_double(s.settled_std_hz) << ','
        << format_double(s.peak_to_peak_hz) << ',' << s.band_violations << '\n';
  }
}

std::vector<json> parse_value_list(const std::string& text) {
  auto number = [&](const std::string& s) {
    try {
      std::size_t pos = 0;
      const double v = std::stod(s, &pos);
      if (pos != s.size()) throw std::invalid_argument(s);
      return v;
    } catch (const std::exception&) {
      throw ValidationError("values: cannot parse '" + s + "'");
    }
  };
  std::vector<json> out;
  if (text.find(':') != std::string::npos) {
    std::vector<double> parts;
    std::stringstream ss(text);
    for (std::string item; std::getline(ss, item, ':');) parts.push_back(number(item));
    if (parts.size() != 3 || !(parts[2] > 0.0) || parts[1] < parts[0]) {
      throw ValidationError("values: range must be start:stop:step with step > 0");
    }
    const auto n = static_cast<long>(std::floor((parts[1] - parts[0]) / parts[2] + 1e-9));
    for (long k = 0; k <= n; ++k) {
      // round to the step's decimal grid so 0.1 * 3 prints as 0.3
      const double v = parts[0] + static_cast<double>(k) * parts[2];
      out.emplace_back(std::round(v * 1e9) / 1e9);
    }
    return out;
  }
  std::stringstream ss(text);
  for (std::string item; std::getline(ss, item, ',');) {
    if (item.empty()) continue;
    const double v = number(item);
    if (v == std::floor(v) && item.find_first_of(".eE") == std::string::npos) out.emplace_back(static_cast<std::int64_t>(v));
    else out.emplace_back(v);
  }
  if (out.empty()) throw ValidationError("values: empty list");
  return out;
}

std::vector<CalibrationCandidate> calibrate(const ScenarioConfig& baseline, const std::vector<double>& kp_values,
                                            const std::vector<double>& ki_values, double constraint_duration_s,
                                            unsigned threads) {
  if (kp_values.empty() || ki_values.empty()) throw ValidationError("calibrate: empty gain grid");
  std::vector<CalibrationCandidate> grid;
  for (double kp : kp_values) {
    for (double ki : ki_values) grid.push_back({kp, ki});
  }

  parallel_for(grid.size(), threads, [&](std::size_t i) {
    auto& c = grid[i];
    ScenarioConfig base = baseline;
    base.controller.kp = c.kp;
    base.controller.ki = c.ki;
    for (auto& l : base.links) {
      l.delay.reset();
      l.drop.reset();
      l.fdi.reset();
      l.replay.reset();
    }
    base.attacks = {};

    HeadlessOptions opts;
    opts.write_files = false;
    auto r = run_headless(base, opts);
    double itae = 0.0;
    const double dt = 1.0 / base.clock.tick_hz;
    for (const auto& rec : r.telemetry) itae += rec.time_s * std::abs(rec.true_f_hz - 50.0) * dt;
    c.itae = itae;
    c.baseline_in_band = r.report.stability.band_violations == 0;

    ScenarioConfig constraint = base;
    constraint.clock.duration_s = std::min(constraint_duration_s, base.clock.duration_s);
    opts.keep_telemetry = false;

    ScenarioConfig delayed = constraint;
    delayed.link(link_ids::s2c).delay = DelaySpec{DelayMode::constant, 4.0, 0.0, 0.0};
    c.delay_oscillates = run_headless(delayed, opts).report.stability.classification == Stability::oscillating;

    ScenarioConfig dropped = constraint;
    dropped.link(link_ids::s2c).drop = DropSpec{0.7};
    c.drop_contained = run_headless(dropped, opts).report.stability.band_violations == 0;
  });
  return grid;
}

std::optional<CalibrationCandidate> best_candidate(const std::vector<CalibrationCandidate>& c) {
  std::optional<CalibrationCandidate> best;
  for (const auto& x : c) {
    if (x.feasible() && (!best || x.itae < best->itae)) best = x;
  }
  return best;
}

} // namespace bessim
