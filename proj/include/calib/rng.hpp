#pragma once

// Portable seeded randomness.
//
// Every stochastic routine in the toolkit draws from SplitMix64 so that
// golden files are reproducible by any implementation of the same
// algorithm:
//
//   state += 0x9E3779B97F4A7C15
//   z = state
//   z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
//   z = (z ^ (z >> 27)) * 0x94D049BB133111EB
//   return z ^ (z >> 31)
//
// Derived quantities:
//   uniform()     = (next() >> 11) * 2^-53                     in [0, 1)
//   below(m)      = high 64 bits of (next() * m), 128-bit      in [0, m)
//   normal()      = Box-Muller on u1 = 1 - uniform(), u2 = uniform(),
//                   sqrt(-2 ln u1) * cos(2 pi u2)   (one draw pair per value)

#include <cmath>
#include <cstdint>
#include <numbers>

namespace calib {

class SplitMix64 {
public:
    explicit constexpr SplitMix64(std::uint64_t seed) noexcept : state_(seed) {}

    constexpr std::uint64_t next() noexcept {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    constexpr double uniform() noexcept {
        return static_cast<double>(next() >> 11) * 0x1.0p-53;
    }

    constexpr std::uint64_t below(std::uint64_t bound) noexcept {
        return static_cast<std::uint64_t>(
            (static_cast<unsigned __int128>(next()) * bound) >> 64);
    }

    double normal() noexcept {
        const double u1 = 1.0 - uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

private:
    std::uint64_t state_;
};

/// Independent stream seed for sub-stream `index` of `seed`.
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) noexcept {
    SplitMix64 g(seed ^ (index * 0xD1B54A32D192ED03ULL));
    g.next();
    return g.next();
}

}  // namespace calib
