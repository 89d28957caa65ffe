#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <string_view>

namespace bessim {

/// Stream labels used by the engine. Each stochastic consumer draws from its
/// own stream so adding draws in one place never shifts another.
namespace streams {
inline constexpr std::string_view consumption_noise = "consumption-noise";
inline constexpr std::string_view consumption_synth = "consumption-synth";
inline constexpr std::string_view la_random = "la-random";
std::string drop(std::string_view link);
std::string delay(std::string_view link);
std::string fdi_random(std::string_view link);
} // namespace streams

std::uint64_t fnv1a64(std::string_view bytes);

/// Reproducible random stream keyed by (seed, stream_id).
///
/// Backed by std::mt19937_64, whose output sequence is fixed by the standard.
/// Real-valued draws are derived from the raw 64-bit words here rather than
/// through std::uniform_real_distribution, whose algorithm is
/// implementation-defined, so the same seed yields the same doubles on every
/// toolchain.
class RngStream {
public:
  RngStream(std::uint64_t seed, std::string_view stream_id);

  /// Uniform on [0, 1) with 53 bits of resolution.
  double uniform01();
  /// Uniform on [lo, hi). Always consumes exactly one draw, also when lo == hi.
  double uniform(double lo, double hi);
  /// True with probability p. Always consumes exactly one draw.
  bool bernoulli(double p);

  [[nodiscard]] std::uint64_t draws() const { return draws_; }
  [[nodiscard]] std::uint64_t seed() const { return seed_; }
  [[nodiscard]] const std::string& id() const { return id_; }

private:
  std::uint64_t seed_;
  std::string id_;
  std::mt19937_64 engine_;
  std::uint64_t draws_ = 0;
};

} // namespace bessim
