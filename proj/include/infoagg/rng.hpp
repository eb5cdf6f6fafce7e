#pragma once

#include <cmath>
#include <cstdint>
#include <limits>

namespace infoagg {

// Stream tags keep the per-purpose sub-streams of one master seed disjoint,
// so that e.g. tie-breaking never reuses the draws that generated the data.
enum class StreamTag : std::uint64_t {
  kSimulate = 1,
  kTieBreak = 2,
  kShuffle = 3,
  kRestart = 4,
  kDifficulty = 5,
  kReplication = 6,
};

// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// derive(master, index, tag): a seed for sub-stream `index` that depends only
// on its arguments, so results do not depend on iteration order or threads.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index,
                                    StreamTag tag) {
  std::uint64_t h = mix64(master + 0x9E3779B97F4A7C15ULL);
  h = mix64(h ^ (static_cast<std::uint64_t>(tag) * 0xD1B54A32D192ED03ULL));
  return mix64(h + index * 0x9E3779B97F4A7C15ULL);
}

// Counter-based SplitMix64 generator. Satisfies UniformRandomBitGenerator.
class SplitMix64 {
 public:
  using result_type = std::uint64_t;

  explicit constexpr SplitMix64(std::uint64_t seed) : state_(seed) {}
  SplitMix64(std::uint64_t master, std::uint64_t index, StreamTag tag)
      : state_(derive_seed(master, index, tag)) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  constexpr result_type operator()() {
    state_ += 0x9E3779B97F4A7C15ULL;
    return mix64(state_);
  }

 private:
  std::uint64_t state_;
};

// Uniform double in [0, 1) with 53 random bits.
inline double uniform01(SplitMix64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

__extension__ using uint128 = unsigned __int128;

// Uniform integer in [0, n) (Lemire's nearly-divisionless method). n > 0.
inline std::uint64_t uniform_index(SplitMix64& rng, std::uint64_t n) {
  uint128 m = static_cast<uint128>(rng()) * n;
  auto low = static_cast<std::uint64_t>(m);
  if (low < n) {
    const std::uint64_t threshold = (0 - n) % n;
    while (low < threshold) {
      m = static_cast<uint128>(rng()) * n;
      low = static_cast<std::uint64_t>(m);
    }
  }
  return static_cast<std::uint64_t>(m >> 64);
}

inline bool bernoulli(SplitMix64& rng, double p) { return uniform01(rng) < p; }

// Standard normal deviate (Box-Muller, one of the pair is discarded).
inline double standard_normal(SplitMix64& rng) {
  double u1 = uniform01(rng);
  while (u1 <= 0.0) u1 = uniform01(rng);
  const double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
}

}  // namespace infoagg
