#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "bessim/attack.hpp"
#include "bessim/clock.hpp"
#include "bessim/packets.hpp"
#include "bessim/rng.hpp"

namespace bessim {

namespace link_ids {
inline constexpr std::string_view s2c = "s2c";
inline constexpr std::string_view c2b = "c2b";
inline constexpr std::string_view b2c_status = "b2c-status";
} // namespace link_ids

bool is_known_link(std::string_view id);

enum class DelayMode { constant, uniform };

struct DelaySpec {
  DelayMode mode = DelayMode::constant;
  double constant_s = 0.0;
  double min_s = 0.0;
  double max_s = 0.0;

  void validate(const std::string& path) const;
  bool operator==(const DelaySpec&) const = default;
};

struct DropSpec {
  double drop_rate = 0.0;

  void validate(const std::string& path) const;
  bool operator==(const DropSpec&) const = default;
};

struct LinkConfig {
  std::string link_id;
  double base_latency_s = 0.02;
  bool allow_reorder = true;
  /// Rejects configs that set both fdi and replay.
  bool exclusive_mutation = true;
  std::optional<DelaySpec> delay;
  std::optional<DropSpec> drop;
  std::optional<FdiSpec> fdi;
  std::optional<ReplaySpec> replay;

  void validate() const;
  bool operator==(const LinkConfig&) const = default;
};

/// Constant mode returns constant_s. Uniform mode draws U(min, max) and
/// always consumes one draw, also when min == max.
double sample_delay(const DelaySpec& spec, RngStream& rng);

/// Ticks of base latency, never less than one.
Tick base_latency_ticks(const LinkConfig& cfg, int tick_hz);

enum AttackFlag : std::uint32_t {
  kFlagDelay = 1u << 0,
  kFlagDrop = 1u << 1,
  kFlagFdi = 1u << 2,
  kFlagReplay = 1u << 3,
};

struct TransmitResult {
  bool dropped = false;
  std::int64_t origin_seq = 0;
  Tick deliver_tick = 0;
  bool mutated = false;
  double before = 0.0;
  double after = 0.0;
  bool replay_empty = false;
};

/// One attackable link. transmit() runs drop -> replay -> fdi -> delay and
/// queues the packet; deliver_due() releases everything due at a tick in
/// origin order. Per-link random streams: drop/<id>, delay/<id>,
/// fdi-random/<id>. Each stream is drawn once per transmitted packet while
/// the matching spec is present, so drop decisions never depend on payloads.
template <class Packet>
class NetLink {
public:
  NetLink(LinkConfig cfg, std::uint64_t seed, int tick_hz)
      : cfg_(std::move(cfg)), tick_hz_(tick_hz), drop_rng_(seed, streams::drop(cfg_.link_id)),
        delay_rng_(seed, streams::delay(cfg_.link_id)), fdi_rng_(seed, streams::fdi_random(cfg_.link_id)) {
    cfg_.validate();
  }

  TransmitResult transmit(Packet pkt, const SimClock& clock) {
    TransmitResult r;
    r.origin_seq = next_origin_++;
    ++transmitted_;
    if (cfg_.drop && drop_rng_.bernoulli(cfg_.drop->drop_rate)) {
      r.dropped = true;
      ++dropped_;
      return r;
    }

    const double t = clock.time_s();
    double& value = payload_value(pkt);
    r.before = value;
    if (cfg_.replay) value = replay_step(value, *cfg_.replay, t, replay_, &r.replay_empty);
    if (cfg_.fdi) value = apply_fdi(value, *cfg_.fdi, fdi_counters_, t, fdi_rng_);
    r.after = value;
    r.mutated = r.after != r.before;

    double delay_s = cfg_.base_latency_s;
    if (cfg_.delay) delay_s += sample_delay(*cfg_.delay, delay_rng_);
    Tick deliver = clock.tick + std::max<Tick>(1, clock.ticks_for(delay_s));
    if (!cfg_.allow_reorder) deliver = std::max(deliver, last_deliver_);
    last_deliver_ = deliver;
    r.deliver_tick = deliver;
    queue_[deliver].push_back({std::move(pkt), deliver, r.origin_seq});
    return r;
  }

  std::vector<Packet> deliver_due(Tick tick) {
    std::vector<Packet> out;
    while (!queue_.empty() && queue_.begin()->first <= tick) {
      for (auto& p : queue_.begin()->second) out.push_back(std::move(p.payload));
      queue_.erase(queue_.begin());
    }
    return out;
  }

  /// Live reconfiguration. In-flight packets, stream positions and FDI
  /// counters are kept; replay state restarts when the replay spec changes.
  void reconfigure(LinkConfig cfg) {
    cfg.validate();
    if (cfg.replay != cfg_.replay) replay_ = {};
    cfg_ = std::move(cfg);
  }

  /// Attack classes active at `t_s`, as AttackFlag bits.
  [[nodiscard]] std::uint32_t active_flags(double t_s) const {
    std::uint32_t f = 0;
    if (cfg_.delay) f |= kFlagDelay;
    if (cfg_.drop && cfg_.drop->drop_rate > 0.0) f |= kFlagDrop;
    if (cfg_.fdi && cfg_.fdi->window.contains(t_s)) f |= kFlagFdi;
    if (cfg_.replay && replay_phase(*cfg_.replay, t_s) != ReplayPhase::passthrough) f |= kFlagReplay;
    return f;
  }

  [[nodiscard]] const LinkConfig& config() const { return cfg_; }
  [[nodiscard]] std::size_t in_flight() const {
    std::size_t n = 0;
    for (const auto& [tick, v] : queue_) n += v.size();
    return n;
  }
  [[nodiscard]] std::uint64_t transmitted() const { return transmitted_; }
  [[nodiscard]] std::uint64_t dropped() const { return dropped_; }
  [[nodiscard]] const ReplayState& replay_state() const { return replay_; }

private:
  struct InFlight {
    Packet payload;
    Tick deliver_tick;
    std::int64_t origin_seq;
  };

  LinkConfig cfg_;
  int tick_hz_;
  RngStream drop_rng_;
  RngStream delay_rng_;
  RngStream fdi_rng_;
  FdiCounters fdi_counters_;
  ReplayState replay_;
  std::map<Tick, std::vector<InFlight>> queue_;
  std::int64_t next_origin_ = 0;
  Tick last_deliver_ = 0;
  std::uint64_t transmitted_ = 0;
  std::uint64_t dropped_ = 0;
};

} // namespace bessim
