#include <doctest.h>

#include <atomic>

#include "bessim/errors.hpp"
#include "bessim/frame_hub.hpp"

using namespace bessim;

TEST_CASE("frames fan out to every subscriber with one render") {
  FrameHub hub;
  auto a = hub.subscribe(1);
  auto b = hub.subscribe(1);
  int renders = 0;
  hub.publish(7, [&] {
    ++renders;
    return std::string("{\"x\":1}");
  });
  CHECK(renders == 1);
  auto da = a->take();
  auto db = b->take();
  REQUIRE(da);
  REQUIRE(db);
  CHECK(*da->frame == *db->frame);
  CHECK(da->frame == db->frame);
  CHECK(da->tick == 7);
  CHECK_FALSE(da->gap);
  CHECK_FALSE(a->take());
}

TEST_CASE("decimation filters ticks and skips rendering when nobody wants it") {
  FrameHub hub;
  auto s = hub.subscribe(10);
  CHECK(hub.wants(20));
  CHECK_FALSE(hub.wants(21));
  int renders = 0;
  hub.publish(21, [&] {
    ++renders;
    return std::string("{}");
  });
  CHECK(renders == 0);
  CHECK_FALSE(s->take());
  CHECK_THROWS_AS(hub.subscribe(0), ValidationError);
}

TEST_CASE("slow subscribers coalesce to the latest frame and see a gap") {
  FrameHub hub;
  auto slow = hub.subscribe(1);
  auto fast = hub.subscribe(1);
  for (Tick t = 0; t < 5; ++t) {
    hub.publish(t, [t] { return std::to_string(t); });
    auto f = fast->take();
    REQUIRE(f);
    CHECK(f->tick == t);
    CHECK_FALSE(f->gap);
  }
  auto d = slow->take();
  REQUIRE(d);
  CHECK(d->tick == 4);
  CHECK(*d->frame == "4");
  CHECK(d->gap);
  CHECK(d->skipped == 4);
  hub.publish(5, [] { return std::string("5"); });
  d = slow->take();
  REQUIRE(d);
  CHECK_FALSE(d->gap);
  CHECK(d->skipped == 0);
}

TEST_CASE("notify fires on publish and unsubscribe stops delivery") {
  FrameHub hub;
  auto s = hub.subscribe(1);
  std::atomic<int> calls{0};
  s->set_notify([&] { ++calls; });
  hub.publish(1, [] { return std::string("a"); });
  CHECK(calls == 1);
  hub.unsubscribe(s);
  CHECK(hub.size() == 0);
  hub.publish(2, [] { return std::string("b"); });
  CHECK(calls == 1);
}
