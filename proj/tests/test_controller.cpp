#include <doctest.h>

#include <cmath>
#include <limits>

#include "bessim/controller.hpp"
#include "bessim/errors.hpp"

using namespace bessim;

TEST_CASE("proportional-integral update by hand") {
  PidConfig cfg;
  cfg.kp = 2.0;
  cfg.ki = 0.5;
  cfg.kd = 0.0;
  PidState st;
  // e = 0.1 Hz over 1 s: u = 2 * 0.1 + 0.5 * 0.1 = 0.25
  CHECK(pid_step(0.1, 1.0, st, cfg) == doctest::Approx(0.25));
  CHECK(st.integral == doctest::Approx(0.1));
  // second step, e = -0.2 over 0.5 s: I = 0.1 - 0.1 = 0, u = -0.4
  CHECK(pid_step(-0.2, 0.5, st, cfg) == doctest::Approx(-0.4));
  CHECK(st.integral == doctest::Approx(0.0));
}

TEST_CASE("derivative term is skipped on the first update") {
  PidConfig cfg;
  cfg.kp = 0.0;
  cfg.ki = 0.0;
  cfg.kd = 1.0;
  PidState st;
  CHECK(pid_step(0.3, 1.0, st, cfg) == 0.0);
  // (0.5 - 0.3) / 0.5 = 0.4
  CHECK(pid_step(0.5, 0.5, st, cfg) == doctest::Approx(0.4));
}

TEST_CASE("output saturates and the integral does not wind up") {
  PidConfig cfg;
  cfg.kp = 1.0;
  cfg.ki = 1.0;
  cfg.output_limit_mw = 2.0;
  PidState st;
  for (int i = 0; i < 100; ++i) CHECK(pid_step(1.0, 1.0, st, cfg) == 2.0);
  // ki * I never exceeds the limit
  CHECK(st.integral <= 2.0);
  // the integral was held once saturated: a sign flip moves the output off the rail immediately
  const double u = pid_step(-1.0, 1.0, st, cfg);
  CHECK(u < 2.0);
  CHECK(u == doctest::Approx(-1.0 + (st.integral)));
}

TEST_CASE("integral is clamped to the limit over ki") {
  PidConfig cfg;
  cfg.kp = 0.0;
  cfg.ki = 4.0;
  cfg.output_limit_mw = 2.0;
  PidState st;
  st.integral = 10.0;
  pid_step(0.0, 1.0, st, cfg);
  CHECK(st.integral == doctest::Approx(0.5));
}

TEST_CASE("pid rejects a non-positive dt") {
  PidState st;
  CHECK_THROWS_AS(pid_step(0.1, 0.0, st, PidConfig{}), ValidationError);
}

TEST_CASE("dispatch splits by headroom") {
  bool starved = true;
  auto one = dispatch(1.5, {2.0}, &starved);
  CHECK(one == std::vector<double>{1.5});
  CHECK_FALSE(starved);
  auto two = dispatch(3.0, {1.0, 2.0}, &starved);
  CHECK(two[0] == doctest::Approx(1.0));
  CHECK(two[1] == doctest::Approx(2.0));
  auto none = dispatch(3.0, {0.0, 0.0}, &starved);
  CHECK(none == std::vector<double>{0.0, 0.0});
  CHECK(starved);
  CHECK_THROWS_AS(dispatch(1.0, {}), ValidationError);
}

TEST_CASE("controller dt comes from arrival spacing, floored and capped") {
  PidConfig cfg;
  cfg.kp = 0.0;
  cfg.ki = 1.0;
  cfg.max_dt_s = 2.0;
  CloudController c(cfg);
  SimClock clk;
  clk.tick = 1;
  // first update at tick 1: spacing from tick 0 is one tick
  c.on_measurement({0, 0, 49.9}, clk, {2.0});
  CHECK(c.state().integral == doctest::Approx(0.1 * 0.02));
  // same tick again: floored at one tick
  c.on_measurement({1, 0, 49.9}, clk, {2.0});
  CHECK(c.state().integral == doctest::Approx(0.1 * 0.04));
  // 10 s gap is capped at 2 s
  clk.tick = 501;
  c.on_measurement({2, 0, 49.9}, clk, {2.0});
  CHECK(c.state().integral == doctest::Approx(0.1 * 2.04));
  CHECK(c.last_measurement() == 49.9);
}

TEST_CASE("non-finite measurement yields a zero command") {
  CloudController c;
  SimClock clk;
  clk.tick = 5;
  const auto out = c.on_measurement({0, 0, std::numeric_limits<double>::quiet_NaN()}, clk, {2.0});
  CHECK(out.rejected_payload);
  CHECK(out.command_mw == 0.0);
  REQUIRE(out.packets.size() == 1);
  CHECK(out.packets[0].power_command_mw == 0.0);
  CHECK_FALSE(c.last_measurement().has_value());
}

TEST_CASE("controller packets carry sequence numbers and the send tick") {
  CloudController c;
  SimClock clk;
  clk.tick = 51;
  auto a = c.on_measurement({0, 50, 50.05}, clk, {2.0});
  clk.tick = 101;
  auto b = c.on_measurement({1, 100, 50.05}, clk, {2.0});
  CHECK(a.packets[0].seq == 0);
  CHECK(b.packets[0].seq == 1);
  CHECK(b.packets[0].sent_tick == 101);
  CHECK(a.command_mw < 0.0); // over-frequency: charge
}

TEST_CASE("config validation names the field") {
  PidConfig cfg;
  cfg.ki = -1.0;
  CHECK_THROWS_WITH_AS(cfg.validate(), doctest::Contains("controller.ki"), ValidationError);
  cfg = {};
  cfg.output_limit_mw = 0.0;
  CHECK_THROWS_WITH_AS(cfg.validate(), doctest::Contains("controller.output_limit_mw"), ValidationError);
}
