#pragma once

#include <cstdint>
#include <cstddef>
#include <vector>

namespace kesten {

/// Counter-based random stream.  Each (seed, stream) pair addresses an
/// independent sequence; drawing value n applies a SplitMix64-style bijective
/// mix to a pure counter, so replicate i sees the same numbers no matter
/// which worker computes it.
class CounterRng {
public:
    CounterRng(std::uint64_t seed, std::uint64_t stream = 0) {
        // Spread (seed, stream) into a stream key via two mix rounds.
        key_ = mix(seed ^ 0x9e3779b97f4a7c15ull);
        key_ = mix(key_ ^ (stream + 0xbf58476d1ce4e5b9ull));
        ctr_ = 0;
    }

    std::uint64_t next_u64() { return mix(key_ + (++ctr_) * 0x9e3779b97f4a7c15ull); }

    /// Uniform in [0,1) with 53 random bits.
    double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double a, double b) { return a + (b - a) * uniform01(); }

    /// Index drawn from the categorical law given by cumulative weights
    /// (last entry must be ~1).
    std::size_t categorical_cdf(const std::vector<double>& cdf) {
        double u = uniform01();
        std::size_t lo = 0, hi = cdf.size() - 1;
        while (lo < hi) {
            std::size_t mid = (lo + hi) / 2;
            if (u < cdf[mid]) hi = mid; else lo = mid + 1;
        }
        return lo;
    }

    static std::uint64_t mix(std::uint64_t z) {
        z ^= z >> 30; z *= 0xbf58476d1ce4e5b9ull;
        z ^= z >> 27; z *= 0x94d049bb133111ebull;
        z ^= z >> 31;
        return z;
    }

private:
    std::uint64_t key_ = 0;
    std::uint64_t ctr_ = 0;
};

}  // namespace kesten
