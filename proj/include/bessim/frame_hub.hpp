#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "bessim/clock.hpp"

namespace bessim {

/// Fan-out of telemetry frames to subscribers with latest-wins coalescing.
/// Each subscriber has a one-frame slot; publishing over an unconsumed frame
/// replaces it and marks a gap. The publisher never blocks on subscribers.
class FrameHub {
public:
  struct Delivery {
    std::shared_ptr<const std::string> frame;
    Tick tick = 0;
    bool gap = false;
    std::uint64_t skipped = 0; ///< frames overwritten since the last take
  };

  class Subscriber {
  public:
    explicit Subscriber(int decimation) : decimation_(decimation) {}
    [[nodiscard]] int decimation() const { return decimation_; }

    /// Takes the pending frame, if any.
    std::optional<Delivery> take();
    /// Called (from the publishing thread) after a frame lands in the slot.
    void set_notify(std::function<void()> fn);

  private:
    friend class FrameHub;
    int decimation_;
    std::mutex mu_;
    std::optional<Delivery> pending_;
    bool overwritten_since_take_ = false;
    std::uint64_t skipped_ = 0;
    std::function<void()> notify_;
  };

  /// Throws ValidationError if decimation < 1.
  std::shared_ptr<Subscriber> subscribe(int decimation);
  void unsubscribe(const std::shared_ptr<Subscriber>& s);

  /// Offers tick `tick` to every subscriber whose decimation divides it.
  /// `render` runs at most once, and only if someone wants the tick.
  void publish(Tick tick, const std::function<std::string()>& render);

  [[nodiscard]] std::size_t size() const;
  /// True if some subscriber wants this tick.
  [[nodiscard]] bool wants(Tick tick) const;

private:
  mutable std::mutex mu_;
  std::vector<std::shared_ptr<Subscriber>> subs_;
};

} // namespace bessim
