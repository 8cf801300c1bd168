#pragma once

#include <cstdint>
#include <random>

namespace dbs {

using Rng = std::mt19937_64;

/// splitmix64 finalizer; decorrelates nearby (seed, stream) pairs.
constexpr std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Independent stream for (master seed, stream index).
inline Rng make_rng(std::uint64_t seed, std::uint64_t stream = 0) {
    return Rng(mix64(seed ^ mix64(stream + 0x632be59bd9b4e019ULL)));
}

}  // namespace dbs
