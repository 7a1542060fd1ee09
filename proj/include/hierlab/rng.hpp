#pragma once

#include <cstdint>
#include <random>

namespace hierlab {

using Rng = std::mt19937_64;

/// Independent random streams of one run. Each stream is seeded from
/// (run seed, stream id) through std::seed_seq, so consuming numbers in one
/// stream never shifts another.
enum class Stream : std::uint32_t {
  kEnv = 1,
  kAgentInit = 2,
  kExplore = 3,
  kSample = 4,
  kHer = 5,
  kEval = 6,
  kAgentUpdate = 7,
};

inline Rng make_stream(std::uint64_t seed, Stream stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), 0x48694552u};
  return Rng(seq);
}

inline double uniform01(Rng& rng) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); }

inline double standard_normal(Rng& rng) { return std::normal_distribution<double>(0.0, 1.0)(rng); }

/// Uniform integer in [0, n).
inline std::size_t uniform_index(Rng& rng, std::size_t n) {
  return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

}  // namespace hierlab
