#pragma once

#include <cstdint>
#include <random>

namespace prelac {

using Rng = std::mt19937_64;

/// Named consumers of randomness. A run's global seed is split into one
/// independent stream per consumer, so adding a consumer never shifts the
/// draws another one sees.
enum class SeedStream : std::uint64_t {
  simulator = 1,
  init = 2,
  sampling = 3,
  policy = 4,
  reinit = 5,
  topology = 6,
  reshuffle = 7,
  evaluation = 8,
};

std::uint64_t splitmix64(std::uint64_t x);

/// Deterministic sub-seed for (seed, stream, index).
std::uint64_t derive_seed(std::uint64_t seed, SeedStream stream, std::uint64_t index = 0);

inline Rng make_rng(std::uint64_t seed, SeedStream stream, std::uint64_t index = 0) {
  return Rng(derive_seed(seed, stream, index));
}

}  // namespace prelac
