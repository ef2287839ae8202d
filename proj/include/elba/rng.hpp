#pragma once

#include <cstdint>
#include <string_view>

namespace elba {

// Deterministic splitmix64 stream with named substreams. Substreams are
// derived from the construction seed, not the evolving state, so the order
// in which they are taken never changes their output.
class Rng {
public:
    explicit Rng(uint64_t seed) : seed_(seed), state_(seed) {}

    uint64_t next_u64() {
        state_ += 0x9e3779b97f4a7c15ull;
        uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    // Uniform in [0, 1), 53-bit mantissa.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform integer in [0, n). Multiply-shift; bias is negligible for the
    // ranges used here and the mapping is fully deterministic.
    uint64_t below(uint64_t n) {
        return static_cast<uint64_t>(
            (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
    }

    bool chance(double p) { return uniform() < p; }

    template <typename Vec>
    void shuffle(Vec& v) {
        for (size_t i = v.size(); i > 1; --i) {
            size_t j = static_cast<size_t>(below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

    uint64_t seed() const { return seed_; }

    Rng substream(std::string_view name) const {
        return Rng(mix(seed_, hash_name(name)));
    }

    Rng substream(uint64_t index) const {
        return Rng(mix(seed_, 0x5851f42d4c957f2dull ^ index));
    }

    static uint64_t hash_name(std::string_view name) {
        uint64_t h = 0xcbf29ce484222325ull;  // FNV-1a
        for (unsigned char c : name) {
            h ^= c;
            h *= 0x100000001b3ull;
        }
        return h;
    }

    static uint64_t mix(uint64_t a, uint64_t b) {
        uint64_t z = a ^ (b + 0x9e3779b97f4a7c15ull + (a << 6) + (a >> 2));
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

private:
    uint64_t seed_;
    uint64_t state_;
};

}  // namespace elba
