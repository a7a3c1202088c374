#pragma once

#include <cstdint>

namespace sdr {

// Fixed stream tags so that no two consumers of randomness share a
// sequence. Every generator in the project is constructed from
// (master_seed, stream, [substream]) and nothing else, which is what
// makes whole runs reproducible from a single --seed.
namespace stream {
constexpr std::uint64_t dataset = 0xD1;
constexpr std::uint64_t split = 0xD2;
constexpr std::uint64_t coupling_init = 0xC1;
constexpr std::uint64_t z_init = 0xC2;
constexpr std::uint64_t kmeans = 0xE1;
constexpr std::uint64_t gp_init = 0xF1;
constexpr std::uint64_t sweep = 0xA1;
constexpr std::uint64_t diagnostic = 0xB7;
constexpr std::uint64_t test = 0x7E;
}  // namespace stream

/// Counter-based pseudo-random generator (SplitMix64 output function).
///
/// The i-th draw is a pure function hash(key + i * gamma) of the stream
/// key and the counter i, so sequences never depend on call history,
/// and distinct streams derived from the same master seed are
/// statistically independent. Substreams may be split off at any time
/// without disturbing the parent.
class Rng {
 public:
  Rng(std::uint64_t seed, std::uint64_t stream_id);

  std::uint64_t next_u64();

  /// Uniform draw in [0, 1) with 53 random mantissa bits.
  double uniform();
  /// Uniform draw in [lo, hi).
  double uniform(double lo, double hi);
  /// Standard normal via Box-Muller; the paired value is cached.
  double normal();
  /// Uniform integer in {0, ..., n-1}; n must be positive.
  std::uint64_t below(std::uint64_t n);

  /// Derives an independent child generator. Calls on the child do not
  /// advance this generator and vice versa.
  Rng split(std::uint64_t substream_id) const;

 private:
  Rng() = default;
  std::uint64_t key_ = 0;
  std::uint64_t counter_ = 0;
  double spare_normal_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace sdr
