#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace overlap {

// Deterministic RNG used everywhere. Streams derived from (base seed, index)
// via splitmix64 so parallel workers can own disjoint, reproducible substreams.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
    return splitmix64(splitmix64(base) ^ (stream * 0x9e3779b97f4a7c15ULL + 1));
}

class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t bits() { return gen_(); }

    // uniform in [0, 1)
    double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    bool bernoulli(double p) { return uniform() < p; }

    // Box-Muller; one fresh pair per call keeps the stream layout simple.
    double normal() {
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
    }

    // uniform on the (m-1)-simplex: normalized exponentials
    std::vector<double> simplex(std::size_t m) {
        std::vector<double> w(m);
        double total = 0.0;
        for (auto& wi : w) {
            double u = uniform();
            while (u <= 0.0) u = uniform();
            wi = -std::log(u);
            total += wi;
        }
        for (auto& wi : w) wi /= total;
        return w;
    }

private:
    std::mt19937_64 gen_;
};

}  // namespace overlap
