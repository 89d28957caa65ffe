#include "bessim/frame_hub.hpp"

#include <algorithm>

#include "bessim/errors.hpp"

namespace bessim {

std::optional<FrameHub::Delivery> FrameHub::Subscriber::take() {
  std::lock_guard lock(mu_);
  if (!pending_) return std::nullopt;
  Delivery d = std::move(*pending_);
  pending_.reset();
  d.gap = overwritten_since_take_;
  d.skipped = skipped_;
  overwritten_since_take_ = false;
  skipped_ = 0;
  return d;
}

void FrameHub::Subscriber::set_notify(std::function<void()> fn) {
  std::lock_guard lock(mu_);
  notify_ = std::move(fn);
}

std::shared_ptr<FrameHub::Subscriber> FrameHub::subscribe(int decimation) {
  if (decimation < 1) throw ValidationError("decimation: must be >= 1");
  auto s = std::make_shared<Subscriber>(decimation);
  std::lock_guard lock(mu_);
  subs_.push_back(s);
  return s;
}

void FrameHub::unsubscribe(const std::shared_ptr<Subscriber>& s) {
  std::lock_guard lock(mu_);
  subs_.erase(std::remove(subs_.begin(), subs_.end(), s), subs_.end());
}

std::size_t FrameHub::size() const {
  std::lock_guard lock(mu_);
  return subs_.size();
}

bool FrameHub::wants(Tick tick) const {
  std::lock_guard lock(mu_);
  return std::any_of(subs_.begin(), subs_.end(), [tick](const auto& s) { return tick % s->decimation() == 0; });
}

void FrameHub::publish(Tick tick, const std::function<std::string()>& render) {
  std::vector<std::shared_ptr<Subscriber>> targets;
  {
    std::lock_guard lock(mu_);
    for (const auto& s : subs_) {
      if (tick % s->decimation() == 0) targets.push_back(s);
    }
  }
  if (targets.empty()) return;
  auto frame = std::make_shared<const std::string>(render());
  for (const auto& s : targets) {
    std::function<void()> notify;
    {
      std::lock_guard lock(s->mu_);
      if (s->pending_) {
        s->overwritten_since_take_ = true;
        ++s->skipped_;
      }
      s->pending_ = Delivery{frame, tick, false, 0};
      notify = s->notify_;
    }
    if (notify) notify();
  }
}

} // namespace bessim
