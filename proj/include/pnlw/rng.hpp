#pragma once

#include <cstdint>
#include <cmath>
#include <string_view>

namespace pnlw {

// Counter-based stream derivation: every Monte Carlo task derives its own
// generator from (master seed, task path, draw index), so results do not
// depend on scheduling or execution order.
inline uint64_t fnv1a64(std::string_view s, uint64_t h = 0xcbf29ce484222325ULL) {
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline uint64_t splitmix64(uint64_t& x) {
    uint64_t z = (x += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// xoshiro256** with a private Box-Muller cache. std::normal_distribution is
// not reproducible across standard library implementations, so we roll our
// own gaussian.
class Rng {
public:
    explicit Rng(uint64_t seed) {
        uint64_t x = seed;
        for (auto& w : s_) w = splitmix64(x);
        if ((s_[0] | s_[1] | s_[2] | s_[3]) == 0) s_[0] = 1;
    }

    static Rng stream(uint64_t master_seed, std::string_view task_path, uint64_t index = 0) {
        uint64_t h = fnv1a64(task_path);
        uint64_t key = master_seed;
        key ^= h + 0x9e3779b97f4a7c15ULL + (key << 6) + (key >> 2);
        key ^= index + 0x9e3779b97f4a7c15ULL + (key << 6) + (key >> 2);
        return Rng(key);
    }

    uint64_t next_u64() {
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
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // uniform in (0, 1], safe as a log argument
    double uniform_pos() { return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53; }

    double gaussian() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const double u = uniform_pos();
        const double v = uniform();
        const double m = std::sqrt(-2.0 * std::log(u));
        spare_ = m * std::sin(6.283185307179586476925287 * v);
        have_spare_ = true;
        return m * std::cos(6.283185307179586476925287 * v);
    }

    double rademacher() { return (next_u64() & 1) ? 1.0 : -1.0; }

private:
    static uint64_t rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

    uint64_t s_[4];
    double spare_ = 0.0;
    bool have_spare_ = false;
};

} // namespace pnlw
