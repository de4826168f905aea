#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace lipidflow {

/// SplitMix64 step, used to derive independent seeds.
inline std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

/// xorshift64* (shifts 12/25/27, multiplier 0x2545F4914F6CDD1D), seeded through SplitMix64.
class Xorshift64Star {
public:
    explicit Xorshift64Star(std::uint64_t seed) : state_(splitmix64(seed)) { if (state_ == 0) state_ = 1; }

    std::uint64_t next()
    {
        state_ ^= state_ >> 12;
        state_ ^= state_ << 25;
        state_ ^= state_ >> 27;
        return state_ * 0x2545F4914F6CDD1Dull;
    }

    /// Uniform in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    /// Standard normal via Box-Muller; the second variate is discarded for stream simplicity.
    double gaussian()
    {
        const double u1 = 1.0 - uniform();  // (0, 1]
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

private:
    std::uint64_t state_;
};

}  // namespace lipidflow
