#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "bessim/errors.hpp"
#include "bessim/runner.hpp"

using namespace bessim;
namespace fs = std::filesystem;

namespace {

ScenarioConfig short_cfg() {
  auto c = default_scenario();
  c.clock.duration_s = 120.0;
  return c;
}

} // namespace

TEST_CASE("headless run writes telemetry and report") {
  const auto dir = fs::temp_directory_path() / "bessim_runner_test";
  fs::remove_all(dir);
  HeadlessOptions o;
  o.out_dir = dir;
  const auto r = run_headless(short_cfg(), o);
  CHECK(r.ticks == 6000);
  CHECK(fs::exists(dir / "telemetry.csv"));
  CHECK(fs::exists(dir / "report.json"));
  std::ifstream in(dir / "report.json");
  const auto j = nlohmann::json::parse(in);
  const auto back = report_from_json(j);
  CHECK(back.stability.classification == r.report.stability.classification);
  CHECK(back.scenario_hash == scenario_hash(short_cfg()));
  std::ifstream csv(dir / "telemetry.csv");
  std::size_t lines = 0;
  for (std::string s; std::getline(csv, s);) ++lines;
  CHECK(lines == 6001);
}

TEST_CASE("seed override lands in the report and the hash") {
  HeadlessOptions o;
  o.write_files = false;
  o.seed = 1234;
  const auto r = run_headless(short_cfg(), o);
  CHECK(r.report.seed == 1234);
  auto c = short_cfg();
  c.seed = 1234;
  CHECK(r.report.scenario_hash == scenario_hash(c));
}

TEST_CASE("value lists") {
  const auto a = parse_value_list("0:1:0.1");
  REQUIRE(a.size() == 11);
  CHECK(a[3].get<double>() == doctest::Approx(0.3));
  CHECK(a.back().get<double>() == doctest::Approx(1.0));
  const auto b = parse_value_list("50,25");
  CHECK(b.size() == 2);
  CHECK(b[1].get<double>() == 25.0);
  CHECK_THROWS_AS(parse_value_list(""), ValidationError);
  CHECK_THROWS_AS(parse_value_list("1:0:0.1"), ValidationError);
  CHECK_THROWS_AS(parse_value_list("a,b"), ValidationError);
}

TEST_CASE("sweep rows come back in value order and match single runs") {
  auto c = short_cfg();
  const auto values = parse_value_list("0,0.5,0.9");
  const auto rows = sweep(c, "links.s2c.drop.drop_rate", values, 3);
  REQUIRE(rows.size() == 3);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(rows[i].value == values[i]);
    auto single = c;
    single.link("s2c").drop = DropSpec{values[i].get<double>()};
    HeadlessOptions o;
    o.write_files = false;
    CHECK(run_headless(single, o).report.stability.abnormal_share == rows[i].report.stability.abnormal_share);
  }
  std::ostringstream out;
  write_sweep_table(out, rows);
  CHECK(out.str().rfind("value,classification,abnormal_share", 0) == 0);
  CHECK_THROWS_AS(sweep(c, "links.s2c.drop.drop_rate", parse_value_list("2"), 1), ValidationError);
}
