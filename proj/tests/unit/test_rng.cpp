#include "wz/rng.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <set>

using wz::rng::Counter;

namespace {

std::uint64_t key_of(std::uint32_t k0, std::uint32_t k1) { return (std::uint64_t{k1} << 32) | k0; }

}  // namespace

// Published known-answer vectors for Philox4x32-10.
TEST(Philox, KnownAnswerZero) {
    const Counter out = wz::rng::philox4x32({0, 0, 0, 0}, 0);
    EXPECT_EQ(out, (Counter{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u}));
}

TEST(Philox, KnownAnswerOnes) {
    const Counter out = wz::rng::philox4x32({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu},
                                            key_of(0xffffffffu, 0xffffffffu));
    EXPECT_EQ(out, (Counter{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu}));
}

TEST(Philox, KnownAnswerPiDigits) {
    const Counter out = wz::rng::philox4x32({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u},
                                            key_of(0xa4093822u, 0x299f31d0u));
    EXPECT_EQ(out, (Counter{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u}));
}

TEST(Normal, PureFunctionOfAddress) {
    EXPECT_EQ(wz::rng::normal(7, 1, 2, 3), wz::rng::normal(7, 1, 2, 3));
    EXPECT_NE(wz::rng::normal(7, 1, 2, 3), wz::rng::normal(7, 1, 2, 4));
    EXPECT_NE(wz::rng::normal(7, 1, 2, 3), wz::rng::normal(8, 1, 2, 3));
}

TEST(Normal, FirstFourMoments) {
    const int n = 200000;
    double s1 = 0, s2 = 0, s3 = 0, s4 = 0;
    for (int j = 0; j < n; ++j) {
        const double z = wz::rng::normal(42, 0, 0, static_cast<std::uint64_t>(j));
        s1 += z;
        s2 += z * z;
        s3 += z * z * z;
        s4 += z * z * z * z;
    }
    // Standard errors: 1/√n, √(2/n), √(15/n), √(96/n).
    const double rn = std::sqrt(static_cast<double>(n));
    EXPECT_NEAR(s1 / n, 0.0, 5.0 / rn);
    EXPECT_NEAR(s2 / n, 1.0, 5.0 * std::sqrt(2.0) / rn);
    EXPECT_NEAR(s3 / n, 0.0, 5.0 * std::sqrt(15.0) / rn);
    EXPECT_NEAR(s4 / n, 3.0, 5.0 * std::sqrt(96.0) / rn);
}

TEST(Uniform, OpenLeftUnitInterval) {
    EXPECT_GT(wz::rng::to_unit_open_left(0, 0), 0.0);
    EXPECT_LE(wz::rng::to_unit_open_left(0xffffffffu, 0xffffffffu), 1.0);
    double mean = 0.0;
    const int n = 100000;
    for (int j = 0; j < n; ++j) mean += wz::rng::uniform(3, 0, 0, static_cast<std::uint64_t>(j));
    EXPECT_NEAR(mean / n, 0.5, 5.0 * std::sqrt(1.0 / 12.0 / n));
}

TEST(DeriveSeed, DistinctStreams) {
    std::set<std::uint64_t> seen;
    for (std::uint64_t s = 0; s < 4; ++s)
        for (std::uint64_t p = 0; p < 1000; ++p) seen.insert(wz::rng::derive_seed(s, p));
    EXPECT_EQ(seen.size(), 4000u);
    static_assert(wz::rng::derive_seed(1, 2) == wz::rng::derive_seed(1, 2));
}
