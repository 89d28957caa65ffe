#include "bessim/link.hpp"

#include <cmath>

#include "bessim/errors.hpp"

namespace bessim {

bool is_known_link(std::string_view id) {
  return id == link_ids::s2c || id == link_ids::c2b || id == link_ids::b2c_status;
}

void DelaySpec::validate(const std::string& path) const {
  if (mode == DelayMode::constant) {
    if (!std::isfinite(constant_s) || constant_s < 0.0) {
      throw ValidationError(path + ".constant_s: must be >= 0");
    }
    return;
  }
  if (!std::isfinite(min_s) || min_s < 0.0) throw ValidationError(path + ".min_s: must be >= 0");
  if (!std::isfinite(max_s) || max_s < min_s) throw ValidationError(path + ".max_s: must be >= min_s");
}

void DropSpec::validate(const std::string& path) const {
  if (!(drop_rate >= 0.0 && drop_rate <= 1.0)) throw ValidationError(path + ".drop_rate: must be in [0, 1]");
}

void LinkConfig::validate() const {
  if (!is_known_link(link_id)) {
    throw ValidationError("links.link_id: unknown link '" + link_id + "' (expected s2c, c2b or b2c-status)");
  }
  const std::string path = "links." + link_id;
  if (!std::isfinite(base_latency_s) || base_latency_s < 0.0) {
    throw ValidationError(path + ".base_latency_s: must be >= 0");
  }
  if (delay) delay->validate(path + ".delay");
  if (drop) drop->validate(path + ".drop");
  if (fdi) fdi->validate(path + ".fdi");
  if (replay) replay->validate(path + ".replay");
  if (exclusive_mutation && fdi && replay) {
    throw ValidationError(path + ": fdi and replay are mutually exclusive (set exclusive_mutation false to compose)");
  }
}

double sample_delay(const DelaySpec& spec, RngStream& rng) {
  if (spec.mode == DelayMode::constant) return spec.constant_s;
  return rng.uniform(spec.min_s, spec.max_s);
}

Tick base_latency_ticks(const LinkConfig& cfg, int tick_hz) {
  return std::max<Tick>(1, std::llround(cfg.base_latency_s * tick_hz));
}

} // namespace bessim
