/**
 * @file rng.hpp
 * @brief Counter-based normal variates.
 *
 * Philox4x32-10 (Salmon et al., SC'11) keyed by a 64-bit seed. Every variate is a
 * pure function of (seed, counter), so values do not depend on generation order
 * or on how work is split across threads.
 */
#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace wz::rng {

using Counter = std::array<std::uint32_t, 4>;

namespace detail {

inline void philox_round(Counter& ctr, std::array<std::uint32_t, 2> key) {
    constexpr std::uint64_t m0 = 0xD2511F53u;
    constexpr std::uint64_t m1 = 0xCD9E8D57u;
    const std::uint64_t p0 = m0 * ctr[0];
    const std::uint64_t p1 = m1 * ctr[2];
    const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
    const auto lo0 = static_cast<std::uint32_t>(p0);
    const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
    const auto lo1 = static_cast<std::uint32_t>(p1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
}

}  // namespace detail

inline Counter philox4x32(Counter ctr, std::uint64_t seed) {
    std::array<std::uint32_t, 2> key = {static_cast<std::uint32_t>(seed),
                                        static_cast<std::uint32_t>(seed >> 32)};
    for (int round = 0; round < 10; ++round) {
        detail::philox_round(ctr, key);
        key[0] += 0x9E3779B9u;
        key[1] += 0xBB67AE85u;
    }
    return ctr;
}

/// SplitMix64 finalizer; used to derive independent stream seeds.
constexpr std::uint64_t mix64(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ull;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

/// Seed for replicate `stream` of a study keyed by `seed`.
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
    return mix64(seed ^ mix64(stream + 0x632BE59BD9B4E019ull));
}

/// Uniform in (0, 1] from two 32-bit words (53 significant bits).
inline double to_unit_open_left(std::uint32_t hi, std::uint32_t lo) {
    const std::uint64_t bits = ((static_cast<std::uint64_t>(hi) << 32) | lo) >> 11;
    return (static_cast<double>(bits) + 1.0) * 0x1.0p-53;
}

/// Standard normal variate addressed by (seed, a, b, c). Box-Muller on one Philox block.
inline double normal(std::uint64_t seed, std::uint32_t a, std::uint32_t b, std::uint64_t c) {
    const Counter out = philox4x32(
        {a, b, static_cast<std::uint32_t>(c), static_cast<std::uint32_t>(c >> 32)}, seed);
    const double u1 = to_unit_open_left(out[0], out[1]);
    const double u2 = to_unit_open_left(out[2], out[3]);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

/// Uniform in (0, 1] addressed like `normal`.
inline double uniform(std::uint64_t seed, std::uint32_t a, std::uint32_t b, std::uint64_t c) {
    const Counter out = philox4x32(
        {a, b, static_cast<std::uint32_t>(c), static_cast<std::uint32_t>(c >> 32)}, seed);
    return to_unit_open_left(out[0], out[1]);
}

}  // namespace wz::rng
