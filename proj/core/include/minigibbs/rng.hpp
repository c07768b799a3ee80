#pragma once

#include <cstdint>
#include <random>

namespace minigibbs {

/// All stochastic operations in this library take an explicit generator;
/// there is no hidden global RNG state.
using Rng = std::mt19937_64;

/// Derives an independent stream seed from a base seed and a stream index
/// (splitmix64 finalizer). Used wherever work is fanned out across threads
/// or rows so that results stay reproducible for a fixed base seed.
inline std::uint64_t derive_stream_seed(std::uint64_t base, std::uint64_t stream) {
  std::uint64_t z = base + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline double uniform01(Rng& rng) {
  return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

/// Uniform integer in [0, bound). bound must be positive.
inline std::int64_t uniform_index(Rng& rng, std::int64_t bound) {
  return std::uniform_int_distribution<std::int64_t>(0, bound - 1)(rng);
}

}  // namespace minigibbs
