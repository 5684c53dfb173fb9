#pragma once

#include <cstdint>
#include <random>

namespace fwa {

using Rng = std::mt19937_64;

/// splitmix64 finalizer; used to derive independent streams from one user seed.
[[nodiscard]] constexpr std::uint64_t mix_seed(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Named sub-streams of a run seed. Sampling never shares a stream with
/// initialization or data generation, so twin runs see identical index draws.
enum class Stream : std::uint64_t {
    Data = 1,
    Init = 2,
    Sampling = 3,
    Twin = 4,
    Split = 5,
    Probe = 6,
};

[[nodiscard]] inline Rng make_rng(std::uint64_t seed, Stream stream) {
    return Rng(mix_seed(seed ^ mix_seed(static_cast<std::uint64_t>(stream))));
}

} // namespace fwa
