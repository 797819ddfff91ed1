#pragma once

#include <cstdint>
#include <cmath>
#include <string>
#include <string_view>

namespace wildfit {

// Deterministic RNG used everywhere in the pipeline. Wraps a 64-bit
// splitmix-seeded xoshiro-style generator and hand-rolls the
// distributions so that draws are identical across platforms and
// standard-library versions.
class Rng {
public:
    explicit Rng(uint64_t seed) { reseed(seed); }

    void reseed(uint64_t seed) {
        // splitmix64 expansion of the seed into four lanes
        uint64_t x = seed;
        for (auto& si : s_) {
            x += 0x9e3779b97f4a7c15ULL;
            uint64_t z = x;
            z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
            z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
            si = z ^ (z >> 31);
        }
    }

    uint64_t next_u64() {
        // xoshiro256** step
        const uint64_t result = rotl(s_[1] * 5, 7) * 9;
        const uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    // uniform in [0, 1)
    double uniform() { return double(next_u64() >> 11) * 0x1.0p-53; }

    // uniform in [lo, hi)
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // uniform integer in [0, n), n >= 1; multiply-shift, bias < 2^-64
    uint64_t uniform_index(uint64_t n) {
        return uint64_t((static_cast<unsigned __int128>(next_u64()) * n) >> 64);
    }

    // integer in [lo, hi] inclusive
    int64_t uniform_int(int64_t lo, int64_t hi) {
        return lo + int64_t(uniform_index(uint64_t(hi - lo + 1)));
    }

    // standard normal via Box-Muller (no spare caching, keeps streams splittable)
    double gaussian() {
        double u1 = uniform();
        double u2 = uniform();
        if (u1 < 1e-300) u1 = 1e-300;
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    }

    // serializable state
    void get_state(uint64_t out[4]) const { for (int i = 0; i < 4; ++i) out[i] = s_[i]; }
    void set_state(const uint64_t in[4]) { for (int i = 0; i < 4; ++i) s_[i] = in[i]; }

private:
    static uint64_t rotl(uint64_t v, int k) { return (v << k) | (v >> (64 - k)); }
    uint64_t s_[4];
};

// FNV-1a based seed derivation. Parallel lanes each own a stream derived
// from (global seed, labels...), so results never depend on scheduling.
inline uint64_t hash_combine(uint64_t h, uint64_t v) {
    h ^= v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    return h;
}

inline uint64_t hash_str(uint64_t h, std::string_view s) {
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline uint64_t derive_seed(uint64_t global_seed, std::string_view label) {
    return hash_str(hash_combine(0xcbf29ce484222325ULL, global_seed), label);
}

inline uint64_t derive_seed(uint64_t global_seed, std::string_view label, uint64_t a) {
    return hash_combine(derive_seed(global_seed, label), a);
}

inline uint64_t derive_seed(uint64_t global_seed, std::string_view label, uint64_t a, uint64_t b) {
    return hash_combine(derive_seed(global_seed, label, a), b);
}

inline uint64_t derive_seed(uint64_t global_seed, std::string_view label,
                            std::string_view s, uint64_t a, uint64_t b) {
    return hash_combine(hash_combine(hash_str(derive_seed(global_seed, label), s), a), b);
}

} // namespace wildfit
