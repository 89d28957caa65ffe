#include <doctest.h>

#include <sstream>

#include "bessim/link.hpp"
#include "bessim/telemetry.hpp"

using namespace bessim;

TEST_CASE("attack flags render per link and kind") {
  CHECK(attack_flags_to_string(0) == "");
  CHECK(attack_flags_to_string(kFlagFdi << attack_bits::kS2cShift) == "s2c.fdi");
  CHECK(attack_flags_to_string((kFlagDelay << attack_bits::kS2cShift) | (kFlagDrop << attack_bits::kC2bShift) |
                               (kFlagReplay << attack_bits::kStatusShift) | attack_bits::kLoadAlter) ==
        "s2c.delay+c2b.drop+b2c-status.replay+la");
}

TEST_CASE("format_double round-trips") {
  for (double v : {0.0, 1.0, 49.8, 50.0 / 1.002, 1e-300, -123456.789}) {
    CHECK(std::stod(format_double(v)) == v);
  }
  CHECK(format_double(50.0) == "50");
}

TEST_CASE("telemetry CSV rows and decimation") {
  std::vector<TelemetryRecord> log;
  for (int i = 0; i < 5; ++i) {
    TelemetryRecord r;
    r.tick = i;
    r.time_s = i * 0.02;
    r.true_f_hz = 50.0;
    if (i > 1) r.measured_f_hz = 49.5;
    log.push_back(r);
  }
  std::ostringstream out;
  write_telemetry_csv(out, log, 2);
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  CHECK(line == kTelemetryHeader);
  std::getline(in, line);
  CHECK(line == "0,0,0,0,50,,0,0,0,");
  std::getline(in, line);
  CHECK(line == "2,0.04,0,0,50,49.5,0,0,0,");
  std::getline(in, line);
  CHECK(line.rfind("4,", 0) == 0);
  CHECK_FALSE(std::getline(in, line));
}

TEST_CASE("report JSON keeps its key order and round-trips") {
  RunReport r;
  r.stability.classification = Stability::steady_state_error;
  r.stability.settled_mean_hz = 49.8;
  r.stability.band_violations = 12;
  r.seed = 7;
  r.scenario_hash = "0123456789abcdef";
  const auto j = report_to_json(r);
  std::vector<std::string> keys;
  for (const auto& [k, _] : j.items()) keys.push_back(k);
  CHECK(keys == std::vector<std::string>{"classification", "settled_mean_hz", "settled_std_hz", "peak_to_peak_hz",
                                         "abnormal_share", "band_violations", "seed", "scenario_hash"});
  const auto back = report_from_json(nlohmann::json::parse(j.dump()));
  CHECK(back.stability.classification == Stability::steady_state_error);
  CHECK(back.stability.settled_mean_hz == 49.8);
  CHECK(back.stability.band_violations == 12);
  CHECK(back.seed == 7);
  CHECK(back.scenario_hash == r.scenario_hash);
}

TEST_CASE("record JSON uses null for a missing measurement") {
  TelemetryRecord r;
  const auto j = record_to_json(r);
  CHECK(j["measured_f_hz"].is_null());
  CHECK(j["attacks"] == "");
}
