#include <doctest.h>

#include <cmath>

#include "bessim/attack.hpp"
#include "bessim/errors.hpp"

using namespace bessim;

TEST_CASE("FDI pipeline order: base, ramp, scale, offset, random, pulse") {
  FdiSpec s;
  s.base = 10.0;
  s.ramp_rate = 0.5;
  s.scale = 2.0;
  s.offset = 1.0;
  s.random_lo = s.random_hi = 0.25;
  s.pulse = PulseSpec{100.0, 1};
  s.window.start_s = 4.0;
  FdiCounters c;
  RngStream rng(1, "fdi");
  // ((10 + 0.5 * (6 - 4)) * 2 + 1) + 0.25 + 100
  CHECK(apply_fdi(3.0, s, c, 6.0, rng) == doctest::Approx(123.25));
  CHECK(c.packets == 1);
  CHECK(c.mutated == 1);
}

TEST_CASE("bias and scaling reproduce the documented fixed-point inputs") {
  RngStream rng(1, "fdi");
  FdiCounters c;
  FdiSpec bias;
  bias.offset = 0.2;
  CHECK(apply_fdi(49.8, bias, c, 0.0, rng) == doctest::Approx(50.0));
  FdiSpec sc;
  sc.scale = 1.002;
  CHECK(apply_fdi(50.0 / 1.002, sc, c, 0.0, rng) == doctest::Approx(50.0));
}

TEST_CASE("property: identity spec is the identity and still draws once per packet") {
  FdiSpec id;
  FdiCounters c;
  RngStream rng(5, "fdi");
  RngStream values(9, "values");
  for (int i = 0; i < 5000; ++i) {
    const double v = values.uniform(-1e6, 1e6);
    REQUIRE(apply_fdi(v, id, c, i * 0.02, rng) == v);
  }
  CHECK(rng.draws() == 5000);
  CHECK(c.packets == 5000);
}

TEST_CASE("outside the window FDI is the identity and counters do not move") {
  FdiSpec s;
  s.offset = 1.0;
  s.window = {10.0, 20.0};
  FdiCounters c;
  RngStream rng(1, "fdi");
  CHECK(apply_fdi(5.0, s, c, 9.99, rng) == 5.0);
  CHECK(apply_fdi(5.0, s, c, 20.01, rng) == 5.0);
  CHECK(c.packets == 0);
  CHECK(rng.draws() == 0);
  CHECK(apply_fdi(5.0, s, c, 10.0, rng) == 6.0);
  CHECK(apply_fdi(5.0, s, c, 20.0, rng) == 6.0);
}

TEST_CASE("interval mutates every n-th in-window packet starting with the first") {
  FdiSpec s;
  s.offset = 1.0;
  s.interval = 3;
  FdiCounters c;
  RngStream rng(1, "fdi");
  std::vector<double> out;
  for (int i = 0; i < 7; ++i) out.push_back(apply_fdi(0.0, s, c, 0.0, rng));
  CHECK(out == std::vector<double>{1, 0, 0, 1, 0, 0, 1});
  CHECK(c.mutated == 3);
}

TEST_CASE("pulse lands on every n-th mutated packet") {
  FdiSpec s;
  s.pulse = PulseSpec{2.0, 20};
  FdiCounters c;
  RngStream rng(1, "fdi");
  for (int i = 1; i <= 60; ++i) {
    const double v = apply_fdi(50.0, s, c, 0.0, rng);
    CHECK(v == (i % 20 == 0 ? 52.0 : 50.0));
  }
}

TEST_CASE("random FDI stays within its range") {
  FdiSpec s;
  s.random_lo = -0.5;
  s.random_hi = 0.25;
  FdiCounters c;
  RngStream rng(1, "fdi");
  for (int i = 0; i < 1000; ++i) {
    const double d = apply_fdi(50.0, s, c, 0.0, rng) - 50.0;
    REQUIRE(d >= -0.5);
    REQUIRE(d < 0.25);
  }
}

TEST_CASE("FDI validation names the field") {
  FdiSpec s;
  s.interval = 0;
  CHECK_THROWS_WITH_AS(s.validate("links.s2c.fdi"), "links.s2c.fdi.interval: must be >= 1", ValidationError);
  s = {};
  s.random_lo = 1.0;
  CHECK_THROWS_WITH_AS(s.validate("x"), doctest::Contains("x.randomness"), ValidationError);
  s = {};
  s.window.stop_s = -1.0;
  CHECK_THROWS_AS(s.validate("x"), ValidationError);
}

TEST_CASE("replay phases") {
  ReplaySpec r{10.0, 5.0, 3.0};
  CHECK(replay_phase(r, 9.99) == ReplayPhase::passthrough);
  CHECK(replay_phase(r, 10.0) == ReplayPhase::record);
  CHECK(replay_phase(r, 14.99) == ReplayPhase::record);
  CHECK(replay_phase(r, 15.0) == ReplayPhase::replay);
  CHECK(replay_phase(r, 17.99) == ReplayPhase::replay);
  CHECK(replay_phase(r, 18.0) == ReplayPhase::passthrough);
}

TEST_CASE("property: replay round-trip is exact and cycles") {
  ReplaySpec r{0.0, 10.0, 30.0};
  ReplayState st;
  RngStream rng(2, "replay");
  std::vector<double> recorded;
  double t = 0.0;
  for (; t < 10.0; t += 1.0) {
    const double v = rng.uniform(49.0, 51.0);
    recorded.push_back(v);
    CHECK(replay_step(v, r, t, st) == v);
  }
  CHECK(st.buffer == recorded);
  for (std::size_t i = 0; t < 40.0; t += 1.0, ++i) {
    CHECK(replay_step(-1.0, r, t, st) == recorded[i % recorded.size()]);
  }
  CHECK(replay_step(7.0, r, 40.0, st) == 7.0);
}

TEST_CASE("replay with an empty buffer passes through and says so") {
  ReplaySpec r{0.0, 1.0, 1.0};
  ReplayState st;
  bool empty = false;
  CHECK(replay_step(3.0, r, 1.5, st, &empty) == 3.0);
  CHECK(empty);
  CHECK_THROWS_AS((ReplaySpec{0.0, 0.0, 1.0}.validate("r")), ValidationError);
}

TEST_CASE("load alteration redraws on interval boundaries and holds in between") {
  LoadAlterSpec s;
  s.interval = 50;
  s.offset_mw = 0.5;
  s.random_lo = -1.0;
  s.random_hi = 1.0;
  RngStream rng(1, streams::la_random);
  RngStream ref(1, streams::la_random);
  LoadAlterState st;
  SimClock clk;
  for (Tick k = 0; k < 200; ++k) {
    clk.tick = k;
    const double e = apply_load_alteration(s, clk, 0.0, rng, st);
    if (k % 50 == 0) {
      const double want = 0.5 + ref.uniform(-1.0, 1.0);
      CHECK(e == want);
    }
    CHECK(e == st.effect_mw);
  }
  CHECK(rng.draws() == 4);
}

TEST_CASE("follow-battery signs") {
  LoadAlterSpec s;
  s.follow_battery = FollowBattery{FollowMode::reinforce, 0.3};
  RngStream rng(1, "la");
  LoadAlterState st;
  SimClock clk;
  // battery discharging (+) raises frequency; reinforcing lowers consumption
  CHECK(apply_load_alteration(s, clk, 1.0, rng, st) == doctest::Approx(-0.3));
  CHECK(apply_load_alteration(s, clk, -1.0, rng, st) == doctest::Approx(0.3));
  CHECK(apply_load_alteration(s, clk, 0.0, rng, st) == 0.0);
  s.follow_battery->mode = FollowMode::oppose;
  CHECK(apply_load_alteration(s, clk, 1.0, rng, st) == doctest::Approx(0.3));
}

TEST_CASE("load alteration is zero outside its window") {
  LoadAlterSpec s;
  s.offset_mw = 1.0;
  s.window = {1.0, 2.0};
  RngStream rng(1, "la");
  LoadAlterState st;
  SimClock clk;
  clk.tick = 0;
  CHECK(apply_load_alteration(s, clk, 0.0, rng, st) == 0.0);
  clk.tick = 50;
  CHECK(apply_load_alteration(s, clk, 0.0, rng, st) == 1.0);
  clk.tick = 150;
  CHECK(apply_load_alteration(s, clk, 0.0, rng, st) == 0.0);
  CHECK(st.effect_mw == 0.0);
}

namespace {

TriggerRule rule(TriggerMode mode, double threshold) {
  TriggerRule r;
  r.name = "r";
  r.condition = {"true_f", 50.0, ">", threshold};
  r.action = {{"x", 1}};
  r.mode = mode;
  return r;
}

std::vector<int> fire_pattern(TriggerMode mode, const std::vector<double>& f) {
  std::vector<TriggerRule> rules{rule(mode, 0.1)};
  std::vector<TriggerState> st;
  std::vector<int> out;
  for (double x : f) out.push_back(static_cast<int>(evaluate_triggers(rules, st, {0.0, x, {}, 0.0, 1.0}).size()));
  return out;
}

} // namespace

TEST_CASE("trigger modes") {
  const std::vector<double> f{50.0, 50.2, 50.3, 50.0, 49.8, 49.7, 50.0};
  CHECK(fire_pattern(TriggerMode::once, f) == std::vector<int>{0, 1, 0, 0, 0, 0, 0});
  CHECK(fire_pattern(TriggerMode::latched, f) == std::vector<int>{0, 1, 0, 0, 1, 0, 0});
  CHECK(fire_pattern(TriggerMode::continuous, f) == std::vector<int>{0, 1, 1, 0, 1, 1, 0});
}

TEST_CASE("triggers on absent signals stay false; disabled rules never fire") {
  TriggerRule r = rule(TriggerMode::continuous, 0.0);
  r.condition.signal = "measured_f";
  r.condition.deviation_from.reset();
  r.condition.op = "<";
  r.condition.value = 100.0;
  std::vector<TriggerRule> rules{r};
  std::vector<TriggerState> st;
  CHECK(evaluate_triggers(rules, st, {0.0, 50.0, {}, 0.0, 1.0}).empty());
  CHECK(evaluate_triggers(rules, st, {0.0, 50.0, 49.0, 0.0, 1.0}).size() == 1);
  st[0].disabled = true;
  CHECK(evaluate_triggers(rules, st, {0.0, 50.0, 49.0, 0.0, 1.0}).empty());
}

TEST_CASE("trigger validation") {
  TriggerRule r = rule(TriggerMode::once, 0.1);
  r.condition.signal = "voltage";
  CHECK_THROWS_WITH_AS(r.validate("attacks.triggers[0]"), doctest::Contains("attacks.triggers[0].condition.signal"),
                       ValidationError);
  r = rule(TriggerMode::once, 0.1);
  r.condition.op = "==";
  CHECK_THROWS_AS(r.validate("t"), ValidationError);
  r = rule(TriggerMode::once, 0.1);
  r.action = nlohmann::json::object();
  CHECK_THROWS_AS(r.validate("t"), ValidationError);
}
