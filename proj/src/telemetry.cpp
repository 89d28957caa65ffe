#include "bessim/telemetry.hpp"

#include <array>
#include <charconv>
#include <fstream>

#include "bessim/errors.hpp"
#include "bessim/link.hpp"

namespace bessim {

std::string attack_flags_to_string(std::uint32_t bits) {
  static constexpr std::array<std::pair<int, const char*>, 3> kLinks{
      {{attack_bits::kS2cShift, "s2c"}, {attack_bits::kC2bShift, "c2b"}, {attack_bits::kStatusShift, "b2c-status"}}};
  static constexpr std::array<std::pair<std::uint32_t, const char*>, 4> kKinds{
      {{kFlagDelay, "delay"}, {kFlagDrop, "drop"}, {kFlagFdi, "fdi"}, {kFlagReplay, "replay"}}};
  std::string out;
  auto add = [&out](const std::string& s) {
    if (!out.empty()) out += '+';
    out += s;
  };
  for (const auto& [shift, name] : kLinks) {
    for (const auto& [flag, kind] : kKinds) {
      if (bits & (flag << shift)) add(std::string(name) + "." + kind);
    }
  }
  if (bits & attack_bits::kLoadAlter) add("la");
  return out;
}

std::string format_double(double v) {
  std::array<char, 32> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), ptr);
}

void write_telemetry_row(std::ostream& out, const TelemetryRecord& r) {
  out << r.tick << ',' << format_double(r.time_s) << ',' << format_double(r.consumption_mw) << ','
      << format_double(r.production_mw) << ',' << format_double(r.true_f_hz) << ',';
  if (r.measured_f_hz) out << format_double(*r.measured_f_hz);
  out << ',' << format_double(r.command_mw) << ',' << format_double(r.delivered_mw) << ','
      << format_double(r.soc_mwh) << ',' << attack_flags_to_string(r.attacks) << '\n';
}

void write_telemetry_csv(std::ostream& out, const std::vector<TelemetryRecord>& log, int decimation) {
  if (decimation < 1) throw ValidationError("outputs.telemetry_decimation: must be >= 1");
  out << kTelemetryHeader << '\n';
  for (std::size_t i = 0; i < log.size(); i += static_cast<std::size_t>(decimation)) {
    write_telemetry_row(out, log[i]);
  }
}

void write_telemetry_csv(const std::filesystem::path& path, const std::vector<TelemetryRecord>& log,
                         int decimation) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw RuntimeError("cannot write " + path.string());
  write_telemetry_csv(out, log, decimation);
  if (!out) throw RuntimeError("write failed: " + path.string());
}

nlohmann::json record_to_json(const TelemetryRecord& r) {
  nlohmann::json j;
  j["tick"] = r.tick;
  j["time_s"] = r.time_s;
  j["consumption_mw"] = r.consumption_mw;
  j["production_mw"] = r.production_mw;
  j["true_f_hz"] = r.true_f_hz;
  j["measured_f_hz"] = r.measured_f_hz ? nlohmann::json(*r.measured_f_hz) : nlohmann::json(nullptr);
  j["command_mw"] = r.command_mw;
  j["delivered_mw"] = r.delivered_mw;
  j["soc_mwh"] = r.soc_mwh;
  j["attacks"] = attack_flags_to_string(r.attacks);
  return j;
}

nlohmann::ordered_json report_to_json(const RunReport& r) {
  nlohmann::ordered_json j;
  j["classification"] = to_string(r.stability.classification);
  j["settled_mean_hz"] = r.stability.settled_mean_hz;
  j["settled_std_hz"] = r.stability.settled_std_hz;
  j["peak_to_peak_hz"] = r.stability.peak_to_peak_hz;
  j["abnormal_share"] = r.stability.abnormal_share;
  j["band_violations"] = r.stability.band_violations;
  j["seed"] = r.seed;
  j["scenario_hash"] = r.scenario_hash;
  return j;
}

RunReport report_from_json(const nlohmann::json& j) {
  RunReport r;
  try {
    r.stability.classification = stability_from_string(j.at("classification").get<std::string>());
    r.stability.settled_mean_hz = j.at("settled_mean_hz").get<double>();
    r.stability.settled_std_hz = j.at("settled_std_hz").get<double>();
    r.stability.peak_to_peak_hz = j.at("peak_to_peak_hz").get<double>();
    r.stability.abnormal_share = j.at("abnormal_share").get<double>();
    r.stability.band_violations = j.at("band_violations").get<std::int64_t>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.scenario_hash = j.at("scenario_hash").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("report: ") + e.what());
  }
  return r;
}

void write_report_json(const std::filesystem::path& path, const RunReport& r) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw RuntimeError("cannot write " + path.string());
  out << report_to_json(r).dump(2) << '\n';
  if (!out) throw RuntimeError("write failed: " + path.string());
}

std::vector<double> true_frequency(const std::vector<TelemetryRecord>& log) {
  std::vector<double> f;
  f.reserve(log.size());
  for (const auto& r : log) f.push_back(r.true_f_hz);
  return f;
}

} // namespace bessim
