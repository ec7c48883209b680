#pragma once

#include <cmath>
#include <cstdint>

namespace bsvc {

// SplitMix64 (Steele, Lea, Flood 2014). Small, portable, and splittable:
// derived streams are seeded by hashing (seed, tag) rather than by
// consuming state, so generator calls never interleave across streams.
class SplitMix64 {
  public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    // Uniform in [0, 1) with 53 random bits.
    double next_double() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    // Uniform in [0, bound), unbiased (Lemire with rejection).
    std::uint64_t next_below(std::uint64_t bound) {
        std::uint64_t x = next_u64();
        unsigned __int128 m = static_cast<unsigned __int128>(x) * bound;
        auto lo = static_cast<std::uint64_t>(m);
        if (lo < bound) {
            std::uint64_t threshold = -bound % bound;
            while (lo < threshold) {
                x = next_u64();
                m = static_cast<unsigned __int128>(x) * bound;
                lo = static_cast<std::uint64_t>(m);
            }
        }
        return static_cast<std::uint64_t>(m >> 64);
    }

    // Standard normal via Box-Muller; the paired draw is cached.
    double next_gaussian() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = next_double();
        double u2 = next_double();
        while (u1 <= 0.0) u1 = next_double();
        double r = std::sqrt(-2.0 * std::log(u1));
        double theta = 2.0 * 3.14159265358979323846 * u2;
        spare_ = r * std::sin(theta);
        have_spare_ = true;
        return r * std::cos(theta);
    }

    // Independent child stream identified by (this seed, tag).
    static SplitMix64 derive(std::uint64_t seed, std::uint64_t tag) {
        SplitMix64 mixer(seed ^ (0x6a09e667f3bcc909ull + tag * 0x9e3779b97f4a7c15ull));
        std::uint64_t a = mixer.next_u64();
        std::uint64_t b = mixer.next_u64();
        return SplitMix64(a ^ (b << 1));
    }

  private:
    std::uint64_t state_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

}  // namespace bsvc
