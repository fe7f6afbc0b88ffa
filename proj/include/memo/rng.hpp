#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>
#include <vector>

namespace memo {

// Deterministic RNG used everywhere. Results must be bit-identical across
// platforms and runs, so no std::uniform_*_distribution (implementation
// defined) -- all draws are derived from splitmix64 output directly.
inline uint64_t splitmix64(uint64_t& state) {
    uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// 64-bit FNV-1a, finalized through splitmix64. Used to derive run seeds from
// a base seed plus a label such as "s0013_l2_onehot".
inline uint64_t mix_seed(uint64_t base, std::string_view label) {
    uint64_t h = 0xcbf29ce484222325ULL ^ base;
    h *= 0x100000001b3ULL;
    for (unsigned char c : label) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    uint64_t s = h;
    return splitmix64(s);
}

inline uint64_t mix_seed(uint64_t base, uint64_t salt) {
    uint64_t s = base ^ (salt * 0x9e3779b97f4a7c15ULL + 0x2545f4914f6cdd1dULL);
    return splitmix64(s);
}

class Rng {
public:
    explicit Rng(uint64_t seed) : state_(seed) {
        // burn a couple of outputs so nearby seeds decorrelate
        splitmix64(state_);
        splitmix64(state_);
    }

    uint64_t next_u64() { return splitmix64(state_); }

    // uniform in [0, 1), 53-bit resolution
    double uniform() { return double(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // uniform integer in [0, bound)
    uint64_t index(uint64_t bound) {
        return uint64_t((__uint128_t(next_u64()) * bound) >> 64);
    }

    // standard normal via Box-Muller (cached pair)
    double normal() {
        if (have_cached_) {
            have_cached_ = false;
            return cached_;
        }
        double u1 = uniform();
        double u2 = uniform();
        // avoid log(0)
        while (u1 <= 0.0) u1 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 6.283185307179586476925286766559 * u2;
        cached_ = r * std::sin(a);
        have_cached_ = true;
        return r * std::cos(a);
    }

    // in-place Fisher-Yates
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (size_t i = v.size(); i > 1; --i) {
            size_t j = size_t(index(i));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    uint64_t state_;
    double cached_ = 0.0;
    bool have_cached_ = false;
};

}  // namespace memo
