#include "bessim/rng.hpp"

namespace bessim {

namespace streams {
std::string drop(std::string_view link) { return "drop/" + std::string(link); }
std::string delay(std::string_view link) { return "delay/" + std::string(link); }
std::string fdi_random(std::string_view link) { return "fdi-random/" + std::string(link); }
} // namespace streams

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

} // namespace

RngStream::RngStream(std::uint64_t seed, std::string_view stream_id)
    : seed_(seed), id_(stream_id), engine_(splitmix64(seed ^ splitmix64(fnv1a64(stream_id)))) {}

double RngStream::uniform01() {
  ++draws_;
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double RngStream::uniform(double lo, double hi) {
  const double u = uniform01();
  return lo + (hi - lo) * u;
}

bool RngStream::bernoulli(double p) { return uniform01() < p; }

} // namespace bessim
