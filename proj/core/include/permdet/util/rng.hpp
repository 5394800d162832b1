#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <string_view>
#include <vector>

namespace permdet::util {

// Deterministic RNG used everywhere seeds matter. mt19937_64 is fully
// specified by the standard; the derived draws below avoid
// std::uniform_*_distribution, whose output is implementation-defined.
class Rng {
public:
    explicit Rng(uint64_t seed) : engine_(seed) {}

    uint64_t next_u64() { return engine_(); }

    // Uniform in [0, n). Rejection sampling keeps the draw unbiased.
    uint64_t uniform(uint64_t n) {
        if (n == 0) return 0;
        uint64_t limit = ~uint64_t{0} - (~uint64_t{0} % n);
        uint64_t r;
        do {
            r = engine_();
        } while (r >= limit);
        return r % n;
    }

    size_t index(size_t n) { return static_cast<size_t>(uniform(n)); }

    // Uniform double in [0, 1) with 53 random bits.
    double real() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    bool bernoulli(double p) { return real() < p; }

    // Box-Muller; one variate per pair of uniforms for a stable stream.
    double normal(double mean = 0.0, double stddev = 1.0) {
        double u1 = real();
        while (u1 <= 0.0) u1 = real();
        double u2 = real();
        double z = std::sqrt(-2.0 * std::log(u1)) *
                   std::cos(2.0 * std::numbers::pi * u2);
        return mean + stddev * z;
    }

    // Normal truncated to +/- 2 stddev, the usual init for embedding tables.
    double truncated_normal(double stddev) {
        double z;
        do {
            z = normal(0.0, stddev);
        } while (std::abs(z) > 2.0 * stddev);
        return z;
    }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        // Fisher-Yates with the stable bounded draw.
        for (size_t i = v.size(); i > 1; --i) {
            size_t j = index(i);
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    std::mt19937_64 engine_;
};

inline uint64_t splitmix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline uint64_t fnv1a64(std::string_view s) {
    uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

// Per-cell seed derivation: reproducible regardless of scheduling order.
inline uint64_t derive_seed(uint64_t master, std::string_view cell_id) {
    return splitmix64(master ^ fnv1a64(cell_id));
}

}  // namespace permdet::util
