// Keyed deterministic random streams.
//
// Every consumer derives its own stream from (seed, k1, k2, k3), so generation
// order never depends on thread count or task scheduling. No std::*_distribution
// is used anywhere: the output is identical across platforms for a given seed.
#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace ximpact::rng {

inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

class Stream {
  public:
    static Stream keyed(std::uint64_t seed, std::uint64_t k1 = 0, std::uint64_t k2 = 0,
                        std::uint64_t k3 = 0) {
        // Fold the key words through splitmix so nearby keys decorrelate.
        std::uint64_t s = seed;
        std::uint64_t acc = splitmix64(s);
        s ^= k1 + 0x9e3779b97f4a7c15ULL;
        acc ^= splitmix64(s);
        s ^= k2 + 0xbf58476d1ce4e5b9ULL;
        acc ^= splitmix64(s);
        s ^= k3 + 0x94d049bb133111ebULL;
        acc ^= splitmix64(s);
        Stream out;
        out.state_ = acc;
        return out;
    }

    std::uint64_t next_u64() { return splitmix64(state_); }

    // Uniform in (0, 1): 53-bit mantissa, never exactly 0 (safe for log()).
    double uniform01() {
        const std::uint64_t bits = next_u64() >> 11;
        return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
    }

    // Standard normal via Box-Muller; the second deviate is cached.
    double gaussian() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const double u = uniform01();
        const double v = uniform01();
        const double r = std::sqrt(-2.0 * std::log(u));
        const double a = 2.0 * std::numbers::pi * v;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    double exponential(double rate) { return -std::log(uniform01()) / rate; }

    // Uniform in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  private:
    std::uint64_t state_ = 0;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

}  // namespace ximpact::rng
