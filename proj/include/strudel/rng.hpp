// Deterministic seed derivation and RNG streams.
//
// Every parallel unit of work (group, tree, sample, draw) owns an RNG
// seeded from the user seed plus the unit's coordinates, so results do
// not depend on scheduling or thread count.
#pragma once

#include <cstdint>
#include <random>

namespace strudel {

// splitmix64 finalizer; good avalanche for seed mixing.
inline std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t seed) { return mix64(seed); }

template <typename... Rest>
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t salt, Rest... rest) {
    return derive_seed(mix64(seed ^ mix64(salt)), rest...);
}

inline std::mt19937_64 make_rng(std::uint64_t seed) { return std::mt19937_64(mix64(seed)); }

template <typename... Salts>
std::mt19937_64 make_rng(std::uint64_t seed, Salts... salts) {
    return std::mt19937_64(derive_seed(seed, static_cast<std::uint64_t>(salts)...));
}

}  // namespace strudel
