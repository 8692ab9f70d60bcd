#pragma once

#include <cstdint>
#include <random>

namespace objconf {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer; used to derive independent child seeds.
constexpr std::uint64_t splitmix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Child seed for (stream, index) under a root seed. Every random stream in
/// a Monte Carlo experiment is derived this way, so the result of run r does
/// not depend on which thread executes it or on how many runs precede it.
constexpr std::uint64_t child_seed(std::uint64_t root, std::uint64_t stream,
                                   std::uint64_t index) noexcept {
  return splitmix64(splitmix64(root ^ splitmix64(stream + 1)) + index);
}

} // namespace objconf
