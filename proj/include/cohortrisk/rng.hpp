#pragma once

#include <cstdint>
#include <random>

namespace cohortrisk {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Seed for substream `purpose` of run `run`. Streams for different purposes are
// independent, so changing one model parameter leaves the other draws untouched.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t run, std::uint64_t purpose = 0) {
    return splitmix64(splitmix64(splitmix64(seed) ^ run) ^ (purpose * 0xd1342543de82ef95ULL));
}

class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    static Rng stream(std::uint64_t seed, std::uint64_t run, std::uint64_t purpose = 0) {
        return Rng(derive_seed(seed, run, purpose));
    }

    std::uint64_t next() { return eng_(); }

    // Uniform on the open interval (0, 1), 53-bit resolution.
    double uniform() { return (static_cast<double>(eng_() >> 11) + 0.5) * 0x1.0p-53; }

    std::uint64_t index(std::uint64_t n) { return std::uniform_int_distribution<std::uint64_t>(0, n - 1)(eng_); }

    double normal() { return normal_(eng_); }
    double normal(double mean, double sd) { return mean + sd * normal_(eng_); }

    std::int64_t poisson(double lambda) {
        if (lambda <= 0.0) return 0;
        return std::poisson_distribution<std::int64_t>(lambda)(eng_);
    }

    std::int64_t binomial(std::int64_t n, double p) {
        if (n <= 0 || p <= 0.0) return 0;
        if (p >= 1.0) return n;
        return std::binomial_distribution<std::int64_t>(n, p)(eng_);
    }

    bool bernoulli(double p) { return uniform() < p; }

    std::mt19937_64& engine() { return eng_; }

private:
    std::mt19937_64 eng_;
    std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace cohortrisk
