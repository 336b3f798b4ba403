#pragma once

#include <cmath>
#include <cstdint>

namespace spinenav {

/// Counter-based deterministic generator (SplitMix64 output function over a
/// keyed counter): draw i of stream (seed, stream) is a pure function of
/// (seed, stream, i), so per-trial streams are independent and trials can be
/// evaluated in any order with identical results.
class CounterRng {
public:
    CounterRng(std::uint64_t seed, std::uint64_t stream)
        : key_(mix(seed ^ mix(stream + 0x632be59bd9b4e019ull))) {}

    std::uint64_t next_u64() {
        return mix(key_ + (++counter_) * 0x9e3779b97f4a7c15ull);
    }

    /// Uniform in [0, 1) with 53 random bits.
    double next_unit() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    /// Standard normal via Box-Muller; consumes two uniforms per draw.
    double next_gaussian() {
        double u1 = next_unit();
        const double u2 = next_unit();
        if (u1 <= 0.0) {
            u1 = 0x1.0p-53;
        }
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925287 * u2);
    }

private:
    static std::uint64_t mix(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

} // namespace spinenav
