#pragma once

#include <cstdint>
#include <random>

namespace gensep {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer; decorrelates nearby integer seeds.
constexpr std::uint64_t mix_seed(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Independent stream for replicate `index` under `master_seed`. The stream
/// depends only on the pair, never on the order replicates are executed in.
inline Rng stream_rng(std::uint64_t master_seed, std::uint64_t index) {
    std::seed_seq seq{static_cast<std::uint32_t>(mix_seed(master_seed)),
                      static_cast<std::uint32_t>(mix_seed(master_seed) >> 32),
                      static_cast<std::uint32_t>(mix_seed(index ^ 0x5851f42d4c957f2dULL)),
                      static_cast<std::uint32_t>(mix_seed(index) >> 32)};
    return Rng(seq);
}

}  // namespace gensep
