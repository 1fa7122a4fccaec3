#pragma once

#include <cstdint>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace cfts {

// Deterministic PRNG with explicit stream derivation.  All randomness in the
// toolkit flows through this type so that (config, seed) fixes every output
// byte regardless of platform or standard-library version.  Core generator is
// xoshiro256++ seeded through splitmix64.
class Rng {
public:
    explicit Rng(std::uint64_t seed) { reseed(seed); }

    void reseed(std::uint64_t seed) {
        std::uint64_t x = seed;
        for (auto& s : state_) s = splitmix64(x);
        gauss_cached_ = false;
    }

    // Derives an independent stream keyed by (seed, ids...).  Used to give
    // each unit / epoch / timestep its own reproducible stream.
    static Rng stream(std::uint64_t seed, std::initializer_list<std::uint64_t> ids) {
        std::uint64_t h = seed ^ 0x9e3779b97f4a7c15ULL;
        for (std::uint64_t id : ids) {
            h ^= id + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
            h = splitmix64(h);
        }
        return Rng(h);
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    // Uniform in [0, 1).
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Integer in [0, n).
    std::uint64_t uniform_index(std::uint64_t n) {
        if (n == 0) throw std::invalid_argument("uniform_index: n must be positive");
        // Rejection to kill modulo bias.
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t v;
        do { v = next_u64(); } while (v >= limit);
        return v % n;
    }

    bool bernoulli(double p) { return uniform() < p; }

    // Marsaglia polar method; one spare deviate cached.
    double normal() {
        if (gauss_cached_) {
            gauss_cached_ = false;
            return gauss_cache_;
        }
        double u, v, s;
        do {
            u = 2.0 * uniform() - 1.0;
            v = 2.0 * uniform() - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        const double m = std::sqrt(-2.0 * std::log(s) / s);
        gauss_cache_ = v * m;
        gauss_cached_ = true;
        return u * m;
    }

    double normal(double mean, double std) { return mean + std * normal(); }

    // Rejection-sampled truncated normal on [lo, hi].  std == 0 degenerates to
    // the mean (clamped into the interval).
    double truncated_normal(double mean, double std, double lo, double hi) {
        if (lo > hi) throw std::invalid_argument("truncated_normal: lo > hi");
        if (std < 0.0) throw std::invalid_argument("truncated_normal: std < 0");
        if (std == 0.0) return mean < lo ? lo : (mean > hi ? hi : mean);
        for (int i = 0; i < 100000; ++i) {
            const double x = normal(mean, std);
            if (x >= lo && x <= hi) return x;
        }
        // Interval mass is vanishingly small; fall back to a uniform draw so
        // the sampler stays total.
        return uniform(lo, hi);
    }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            const std::size_t j = uniform_index(i);
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    static std::uint64_t splitmix64(std::uint64_t& x) {
        x += 0x9e3779b97f4a7c15ULL;
        std::uint64_t z = x;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }
    static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

    std::uint64_t state_[4] = {};
    double gauss_cache_ = 0.0;
    bool gauss_cached_ = false;
};

}  // namespace cfts
