#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>

namespace linksim {

// Uniform draw in (0, 1] with 53 random bits. Never returns 0, so it is
// safe under log().
inline double uniform01(std::mt19937_64& eng) {
    return static_cast<double>((eng() >> 11) + 1) * 0x1.0p-53;
}

// Derives a decorrelated child seed for a named stream (splitmix64 step).
// Seeding several engines from `seed + small offset` would hand them
// overlapping raw sequences; this keeps payload bits, latency noise and
// workload jitter on unrelated streams.
inline uint64_t derive_seed(uint64_t seed, std::string_view stream) {
    uint64_t z = seed;
    for (char c : stream) {
        z += 0x9e3779b97f4a7c15ull + static_cast<uint64_t>(static_cast<unsigned char>(c));
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        z = z ^ (z >> 31);
    }
    return z;
}

// Seeded Gaussian stream. Box-Muller on top of mt19937_64 rather than
// std::normal_distribution, whose draw sequence is implementation-defined.
class GaussianStream {
public:
    explicit GaussianStream(uint64_t seed) : eng_(seed) {}

    // One sample ~ N(0, sigma^2).
    double next(double sigma) {
        if (has_spare_) {
            has_spare_ = false;
            return spare_ * sigma;
        }
        double u1 = uniform01(eng_);
        double u2 = uniform01(eng_);
        double r = std::sqrt(-2.0 * std::log(u1));
        double theta = 2.0 * 3.141592653589793238462643383279502884 * u2;
        spare_ = r * std::sin(theta);
        has_spare_ = true;
        return r * std::cos(theta) * sigma;
    }

private:
    std::mt19937_64 eng_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

} // namespace linksim
