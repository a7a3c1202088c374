#include "sdr/rng.hpp"

#include <cmath>
#include <stdexcept>

namespace sdr {
namespace {

constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ULL;

// SplitMix64 finalizer. Bijective on 64-bit words.
std::uint64_t mix(std::uint64_t x) {
  x += kGamma;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

}  // namespace

Rng::Rng(std::uint64_t seed, std::uint64_t stream_id) {
  // Two mixing rounds decorrelate (seed, stream) pairs that differ in
  // only a few bits, e.g. consecutive seeds with consecutive streams.
  key_ = mix(mix(seed) ^ mix(stream_id * kGamma + 0x5851F42D4C957F2DULL));
}

std::uint64_t Rng::next_u64() { return mix(key_ + (counter_++) * kGamma); }

double Rng::uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi) {
  return lo + (hi - lo) * uniform();
}

double Rng::normal() {
  if (have_spare_) {
    have_spare_ = false;
    return spare_normal_;
  }
  // Box-Muller; u1 is shifted into (0, 1] so the log is finite.
  double u1 = 1.0 - uniform();
  double u2 = uniform();
  double r = std::sqrt(-2.0 * std::log(u1));
  double theta = 2.0 * M_PI * u2;
  spare_normal_ = r * std::sin(theta);
  have_spare_ = true;
  return r * std::cos(theta);
}

std::uint64_t Rng::below(std::uint64_t n) {
  if (n == 0) throw std::invalid_argument("Rng::below requires n > 0");
  // Multiply-shift bounded draw; the modulo bias at 64 bits is far
  // below anything observable here.
  return static_cast<std::uint64_t>(uniform() * static_cast<double>(n)) %
         n;
}

Rng Rng::split(std::uint64_t substream_id) const {
  Rng child;
  child.key_ = mix(key_ ^ mix(substream_id * kGamma + 0x2545F4914F6CDD1DULL));
  return child;
}

}  // namespace sdr
