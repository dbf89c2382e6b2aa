#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

namespace commdrop {

// splitmix64 finalizer. Used both as the stream generator and as a mixer for
// seed derivation, so every random decision is reproducible bit for bit on
// any platform (std:: distributions are implementation-defined and are
// deliberately not used anywhere).
inline uint64_t mix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline uint64_t hash_combine(uint64_t a, uint64_t b) {
    return mix64(a ^ (b + 0x9e3779b97f4a7c15ULL + (a << 6) + (a >> 2)));
}

// FNV-1a over bytes, then mixed; stable across platforms.
inline uint64_t hash_str(std::string_view s) {
    uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return mix64(h);
}

// Derives an independent child seed from a master seed and a path of labels.
inline uint64_t derive_seed(uint64_t master, std::initializer_list<uint64_t> path) {
    uint64_t h = mix64(master);
    for (uint64_t p : path) h = hash_combine(h, p);
    return h;
}

class Rng {
public:
    explicit Rng(uint64_t seed) : state_(seed) {}

    uint64_t next_u64() {
        state_ += 0x9e3779b97f4a7c15ULL;
        uint64_t x = state_;
        x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
        x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
        return x ^ (x >> 31);
    }

    // Uniform in [0, 1) with 53 bits of precision.
    double next_unit() { return double(next_u64() >> 11) * 0x1.0p-53; }

    // Uniform in {0, ..., n-1}; modulo bias is ~n/2^64 and irrelevant here.
    uint32_t next_below(uint32_t n) { return n <= 1 ? 0 : uint32_t(next_u64() % n); }

    bool bernoulli(double p) { return next_unit() < p; }

    // Fisher-Yates; uniform over permutations given a uniform source.
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (size_t i = v.size(); i > 1; --i) {
            size_t j = next_below(uint32_t(i));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    uint64_t state_;
};

} // namespace commdrop
