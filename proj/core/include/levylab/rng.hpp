#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace levylab {

// Counter-based seed derivation: replica seeds are a pure function of
// (base seed, replica index), so growing the replica count never reshuffles
// the streams of earlier replicas.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) {
    return splitmix64(base ^ splitmix64(index + 1));
}

// Tags keep auxiliary draws (bridge tests, resampling, ...) on streams
// separate from the path increments themselves.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index, std::uint64_t tag) {
    return splitmix64(derive_seed(base, index) + splitmix64(tag + 0x51AFD6ED558CCD6DULL));
}

// mt19937_64 wrapped with explicit, portable transformations.  Gaussian
// variates use the Marsaglia polar method so the draw sequence is fully
// determined by the engine state (std::normal_distribution is not
// specified bit-for-bit across standard libraries).
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t u64() { return engine_(); }

    // uniform on (0,1), never exactly 0
    double uniform() {
        const std::uint64_t r = engine_() >> 11;  // 53 bits
        return (static_cast<double>(r) + 0.5) * (1.0 / 9007199254740992.0);
    }

    double uniform(double a, double b) { return a + (b - a) * uniform(); }

    double gaussian() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u, v, s;
        do {
            u = 2.0 * uniform() - 1.0;
            v = 2.0 * uniform() - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        const double m = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = v * m;
        has_spare_ = true;
        return u * m;
    }

    double exponential(double rate) { return -std::log(uniform()) / rate; }

    // integer in [0, n)
    std::uint64_t below(std::uint64_t n) {
        // rejection-free is not needed here; modulo bias is negligible for n << 2^64
        return engine_() % n;
    }

  private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace levylab
