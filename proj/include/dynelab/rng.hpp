#pragma once

#include <cstdint>
#include <random>

namespace dynelab {

inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/// Independent, deterministically seeded stream for one trajectory.
/// The (base_seed, traj_index) pair fully determines the stream, so results
/// do not depend on execution order or thread count.
inline std::mt19937_64 trajectory_engine(std::uint64_t base_seed, std::uint64_t traj_index) {
    std::uint64_t s = base_seed;
    const std::uint64_t a = splitmix64(s);
    s ^= (traj_index + 1) * 0xD1B54A32D192ED03ULL;
    const std::uint64_t b = splitmix64(s);
    std::seed_seq seq{static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32),
                      static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32)};
    return std::mt19937_64(seq);
}

} // namespace dynelab
