#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "bessim/errors.hpp"
#include "bessim/grid.hpp"

using namespace bessim;
namespace fs = std::filesystem;

namespace {

fs::path write_temp(const std::string& name, const std::string& body) {
  const auto p = fs::temp_directory_path() / ("bessim_test_" + name);
  std::ofstream(p) << body;
  return p;
}

ConsumptionSeries series_of(std::initializer_list<double> mw) {
  ConsumptionSeries s;
  int k = 0;
  for (double v : mw) s.samples.push_back({k++, v});
  s.window = {0, k - 1};
  return s;
}

} // namespace

TEST_CASE("frequency is production over consumption times 50") {
  CHECK(compute_frequency(210.0, 210.0) == 50.0);
  CHECK(compute_frequency(211.0, 210.0) == doctest::Approx(211.0 / 210.0 * 50.0).epsilon(1e-15));
  CHECK(compute_frequency(100.0, 200.0) == 25.0);
}

TEST_CASE("consumption below the floor is clamped and reported") {
  bool clamped = false;
  CHECK(compute_frequency(2.0, 0.5, 1.0, &clamped) == 100.0);
  CHECK(clamped);
  CHECK(compute_frequency(2.0, 0.0, 1.0, &clamped) == 100.0);
  CHECK(clamped);
  compute_frequency(2.0, 2.0, 1.0, &clamped);
  CHECK_FALSE(clamped);
}

TEST_CASE("consumption is linearly interpolated between minutes") {
  const auto s = series_of({200.0, 260.0, 230.0});
  CHECK(s.duration_s() == 120.0);
  CHECK(consumption_at(s, 0.0) == 200.0);
  CHECK(consumption_at(s, 30.0) == doctest::Approx(230.0));
  CHECK(consumption_at(s, 60.0) == 260.0);
  CHECK(consumption_at(s, 90.0) == doctest::Approx(245.0));
  CHECK(consumption_at(s, 120.0) == 230.0);
  CHECK_THROWS_AS(consumption_at(s, 120.5), RuntimeError);
  CHECK_THROWS_AS(consumption_at(s, -0.1), RuntimeError);
}

TEST_CASE("CSV load applies the scale and re-bases the window") {
  const auto p = write_temp("ok.csv", "minute,consumption_mw\n0,10000\n1,10500\n2,11000\n3,9000\n");
  const auto all = load_consumption_csv(p, 0.02);
  REQUIRE(all.samples.size() == 4);
  CHECK(all.samples[1].consumption_mw == doctest::Approx(210.0));
  CHECK(all.scale == 0.02);

  const auto w = load_consumption_csv(p, 0.02, MinuteWindow{1, 3});
  REQUIRE(w.samples.size() == 3);
  CHECK(w.samples.front().minute == 0);
  CHECK(w.samples.front().consumption_mw == doctest::Approx(210.0));
  CHECK(w.duration_s() == 120.0);
}

TEST_CASE("CSV load rejects malformed input") {
  CHECK_THROWS_AS(load_consumption_csv("/no/such/file.csv", 0.02), ValidationError);
  CHECK_THROWS_AS(load_consumption_csv(write_temp("hdr.csv", "m,c\n0,1\n1,2\n"), 0.02), ValidationError);
  CHECK_THROWS_AS(load_consumption_csv(write_temp("order.csv", "minute,consumption_mw\n0,1\n0,2\n"), 0.02),
                  ValidationError);
  CHECK_THROWS_AS(load_consumption_csv(write_temp("neg.csv", "minute,consumption_mw\n0,1\n1,-2\n"), 0.02),
                  ValidationError);
  CHECK_THROWS_AS(load_consumption_csv(write_temp("one.csv", "minute,consumption_mw\n0,1\n"), 0.02),
                  ValidationError);
  CHECK_THROWS_AS(load_consumption_csv(write_temp("txt.csv", "minute,consumption_mw\n0,abc\n1,2\n"), 0.02),
                  ValidationError);
  const auto ok = write_temp("win.csv", "minute,consumption_mw\n0,1\n1,2\n2,3\n");
  CHECK_THROWS_AS(load_consumption_csv(ok, 0.02, MinuteWindow{1, 5}), ValidationError);
  CHECK_THROWS_AS(load_consumption_csv(ok, 0.0), ValidationError);
}

TEST_CASE("synthetic consumption follows base + k * drift within the noise") {
  RngStream rng(1, streams::consumption_synth);
  const auto s = generate_synthetic_consumption(210.0, -0.01, 0.1, 90, rng);
  REQUIRE(s.samples.size() == 90);
  CHECK(rng.draws() == 90);
  for (int k = 0; k < 90; ++k) {
    CHECK(s.samples[k].minute == k);
    CHECK(std::abs(s.samples[k].consumption_mw - (210.0 - 0.01 * k)) <= 0.1);
  }
  RngStream r2(1, streams::consumption_synth);
  const auto flat = generate_synthetic_consumption(210.0, 0.0, 0.0, 3, r2);
  CHECK(flat.samples[2].consumption_mw == 210.0);
  RngStream r3(1, "x");
  CHECK_THROWS_AS(generate_synthetic_consumption(1.0, -1.0, 0.0, 5, r3), ValidationError);
}

TEST_CASE("grid model holds production at the initial consumption") {
  GridModel g(series_of({210.0, 211.0}), GridParams{0.0, 1.0});
  RngStream noise(1, streams::consumption_noise);
  CHECK(g.state().production_base_mw == 210.0);
  g.step(0.0, 0.0, 0.0, noise);
  CHECK(g.state().frequency_hz == 50.0);
  g.step(30.0, 0.0, 0.5, noise);
  CHECK(g.state().consumption_mw == doctest::Approx(210.5));
  CHECK(g.state().frequency_hz == doctest::Approx(50.0));
  g.step(30.0, 1.0, 0.0, noise);
  CHECK(g.state().frequency_hz == doctest::Approx(210.0 / 211.5 * 50.0));
  // noise draws happen even with zero amplitude, one per step
  CHECK(noise.draws() == 3);
}
