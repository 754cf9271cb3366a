#pragma once

#include <cstdint>
#include <random>

namespace partsat {

// All randomness in a command flows from one 64-bit seed. Independent
// streams are derived with derive_seed(seed, stream_id): the pair is mixed
// through splitmix64 so that nearby ids give unrelated seeds. Stream ids in
// use are listed in the README.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
    return splitmix64(splitmix64(seed) ^ splitmix64(stream + 0x632be59bd9b4e019ull));
}

namespace streams {
inline constexpr std::uint64_t kSecret = 1;        // make_instance secret draw
inline constexpr std::uint64_t kSample = 2;        // random sample for estimation
inline constexpr std::uint64_t kNeighborOrder = 3; // neighbor shuffles in search
inline constexpr std::uint64_t kAcceptance = 4;    // SA acceptance draws
inline constexpr std::uint64_t kSupb = 5;          // SUPB sampling
inline constexpr std::uint64_t kPointSample = 6;   // per-point sample seeds in search
inline constexpr std::uint64_t kVerifyStates = 7;  // random states for the encoder check
}  // namespace streams

// mt19937_64 output is fully specified by the standard, unlike the
// std distributions, so only raw 64-bit draws are used for reproducibility.
using Rng = std::mt19937_64;

// Uniform double in [0, 1) from the top 53 bits of one draw.
inline double unit_uniform(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

// Uniform integer in [0, bound) by rejection on the top bits; bound > 0.
inline std::uint64_t uniform_below(Rng& rng, std::uint64_t bound) {
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % bound);
    std::uint64_t x;
    do {
        x = rng();
    } while (x >= limit);
    return x % bound;
}

}  // namespace partsat
