// Copyright (C) 2026 KTV contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>

namespace ktv {

/// SplitMix64 (Steele, Lea, Flood 2014). Used only to expand a 64-bit seed
/// into xoshiro state and to derive independent stream seeds.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

private:
    std::uint64_t state_;
};

/// xoshiro256** 1.0 (Blackman, Vigna). State is filled from four successive
/// SplitMix64 outputs of the seed. All randomness in the library comes from
/// this generator so fixtures can be reproduced by any implementation:
///   uniform()  = (next() >> 11) * 2^-53, in [0, 1)
///   normal()   = Box-Muller on (1 - uniform(), uniform()); the cosine branch
///                is returned first, the sine branch is cached for the next call.
class Xoshiro256 {
public:
    using result_type = std::uint64_t;

    explicit Xoshiro256(std::uint64_t seed);

    /// Seed for stream `stream` derived from a base seed.
    static std::uint64_t stream_seed(std::uint64_t base, std::uint64_t stream);

    std::uint64_t next();
    std::uint64_t operator()() { return next(); }
    static constexpr std::uint64_t min() { return 0; }
    static constexpr std::uint64_t max() { return ~std::uint64_t{0}; }

    double uniform();
    /// Uniform integer in [0, bound) by rejection; bound must be > 0.
    std::uint64_t below(std::uint64_t bound);
    double normal();

private:
    std::uint64_t s_[4];
    bool has_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace ktv
