#include <doctest.h>

#include "bessim/errors.hpp"
#include "bessim/link.hpp"

using namespace bessim;

namespace {

LinkConfig cfg_for(std::string id) {
  LinkConfig c;
  c.link_id = std::move(id);
  return c;
}

MeasurementPacket m(std::int64_t seq, double hz) { return {seq, 0, hz}; }

} // namespace

TEST_CASE("base latency rounds to ticks and is at least one") {
  auto c = cfg_for("s2c");
  CHECK(base_latency_ticks(c, 50) == 1);
  c.base_latency_s = 0.0;
  CHECK(base_latency_ticks(c, 50) == 1);
  c.base_latency_s = 0.1;
  CHECK(base_latency_ticks(c, 50) == 5);
}

TEST_CASE("clean link delivers one tick later, payload untouched") {
  NetLink<MeasurementPacket> link(cfg_for("s2c"), 1, 50);
  SimClock clk;
  clk.tick = 100;
  const auto r = link.transmit(m(0, 49.95), clk);
  CHECK(r.deliver_tick == 101);
  CHECK_FALSE(r.mutated);
  CHECK(link.deliver_due(100).empty());
  const auto out = link.deliver_due(101);
  REQUIRE(out.size() == 1);
  CHECK(out[0].frequency_hz == 49.95);
  CHECK(link.in_flight() == 0);
}

TEST_CASE("constant 4 s delay adds 200 ticks on top of the base latency") {
  auto c = cfg_for("s2c");
  c.delay = DelaySpec{DelayMode::constant, 4.0, 0.0, 0.0};
  NetLink<MeasurementPacket> link(c, 1, 50);
  SimClock clk;
  clk.tick = 50;
  const auto r = link.transmit(m(0, 50.0), clk);
  CHECK(r.deliver_tick - 50 - base_latency_ticks(c, 50) == 200);
  CHECK(link.active_flags(1.0) == kFlagDelay);
}

TEST_CASE("uniform delay draws stay in range and may reorder") {
  auto c = cfg_for("s2c");
  c.delay = DelaySpec{DelayMode::uniform, 0.0, 0.0, 12.0};
  NetLink<MeasurementPacket> link(c, 3, 50);
  SimClock clk;
  bool reordered = false;
  Tick last = 0;
  for (int i = 0; i < 200; ++i) {
    clk.tick = i * 50;
    const auto r = link.transmit(m(i, 50.0), clk);
    REQUIRE(r.deliver_tick >= clk.tick + 1);
    REQUIRE(r.deliver_tick <= clk.tick + 1 + 600);
    reordered = reordered || r.deliver_tick < last;
    last = std::max(last, r.deliver_tick);
  }
  CHECK(reordered);
}

TEST_CASE("disallowing reorder keeps FIFO order") {
  auto c = cfg_for("s2c");
  c.delay = DelaySpec{DelayMode::uniform, 0.0, 0.0, 12.0};
  c.allow_reorder = false;
  NetLink<MeasurementPacket> link(c, 3, 50);
  SimClock clk;
  for (int i = 0; i < 200; ++i) {
    clk.tick = i * 50;
    link.transmit(m(i, 50.0), clk);
  }
  std::int64_t expect = 0;
  for (Tick t = 0; t <= 200 * 50 + 700; ++t) {
    for (const auto& p : link.deliver_due(t)) REQUIRE(p.seq == expect++);
  }
  CHECK(expect == 200);
}

TEST_CASE("packets due at the same tick come out in origin order") {
  NetLink<MeasurementPacket> link(cfg_for("s2c"), 1, 50);
  SimClock clk;
  for (int i = 0; i < 5; ++i) link.transmit(m(i, i), clk);
  const auto out = link.deliver_due(1);
  REQUIRE(out.size() == 5);
  for (int i = 0; i < 5; ++i) CHECK(out[i].seq == i);
}

TEST_CASE("drop rate 0 and 1 are exact; intermediate rates are close") {
  SimClock clk;
  for (double rate : {0.0, 1.0}) {
    auto c = cfg_for("s2c");
    c.drop = DropSpec{rate};
    NetLink<MeasurementPacket> link(c, 1, 50);
    int dropped = 0;
    for (int i = 0; i < 1000; ++i) dropped += link.transmit(m(i, 50.0), clk).dropped;
    CHECK(dropped == static_cast<int>(rate * 1000));
  }
  auto c = cfg_for("s2c");
  c.drop = DropSpec{0.7};
  NetLink<MeasurementPacket> link(c, 1, 50);
  for (int i = 0; i < 20000; ++i) link.transmit(m(i, 50.0), clk);
  CHECK(std::abs(static_cast<double>(link.dropped()) / link.transmitted() - 0.7) < 0.02);
}

TEST_CASE("drop decisions do not depend on payloads or other streams") {
  auto c = cfg_for("c2b");
  c.drop = DropSpec{0.5};
  auto c2 = c;
  c2.fdi = FdiSpec{};
  c2.fdi->random_lo = -1.0;
  c2.fdi->random_hi = 1.0;
  NetLink<ControlPacket> a(c, 9, 50), b(c2, 9, 50);
  SimClock clk;
  for (int i = 0; i < 500; ++i) {
    const auto ra = a.transmit({i, 0, 1.0 * i, 0}, clk);
    const auto rb = b.transmit({i, 0, -3.0 * i, 0}, clk);
    REQUIRE(ra.dropped == rb.dropped);
  }
}

TEST_CASE("replay then fdi on one link when composition is allowed") {
  auto c = cfg_for("s2c");
  c.replay = ReplaySpec{0.0, 1.0, 1.0};
  c.fdi = FdiSpec{};
  c.fdi->offset = 0.5;
  CHECK_THROWS_AS(c.validate(), ValidationError);
  c.exclusive_mutation = false;
  NetLink<MeasurementPacket> link(c, 1, 50);
  SimClock clk;
  clk.tick = 0;
  CHECK(link.transmit(m(0, 49.0), clk).after == 49.5);
  clk.tick = 60; // replay phase: recorded 49.0, then +0.5
  CHECK(link.transmit(m(1, 51.0), clk).after == 49.5);
}

TEST_CASE("reconfigure keeps in-flight packets") {
  auto c = cfg_for("s2c");
  c.delay = DelaySpec{DelayMode::constant, 1.0, 0.0, 0.0};
  NetLink<MeasurementPacket> link(c, 1, 50);
  SimClock clk;
  link.transmit(m(0, 50.0), clk);
  link.reconfigure(cfg_for("s2c"));
  CHECK(link.in_flight() == 1);
  CHECK(link.deliver_due(51).size() == 1);
  CHECK_FALSE(link.config().delay.has_value());
}

TEST_CASE("link config validation names the field") {
  auto c = cfg_for("x2y");
  CHECK_THROWS_WITH_AS(c.validate(), doctest::Contains("unknown link"), ValidationError);
  c = cfg_for("s2c");
  c.drop = DropSpec{1.5};
  CHECK_THROWS_WITH_AS(c.validate(), "links.s2c.drop.drop_rate: must be in [0, 1]", ValidationError);
  c = cfg_for("c2b");
  c.delay = DelaySpec{DelayMode::uniform, 0.0, 2.0, 1.0};
  CHECK_THROWS_WITH_AS(c.validate(), doctest::Contains("links.c2b.delay.max_s"), ValidationError);
}
