#pragma once

#include <cstdint>
#include <random>

namespace msqpc {

// splitmix64 finalizer; used both as a stream mixer and to seed engines.
inline std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t mix64(std::uint64_t seed, std::uint64_t tag) {
    return mix64(seed ^ mix64(tag));
}

// Deterministic random source. Every consumer derives its own substream
// from one root seed via fork(), so adding or removing a draw in one
// component never perturbs the stream seen by another.
//
// Bounded draws use rejection sampling on the raw 64-bit output, so the
// sequence is identical across standard-library implementations.
class RandomSource {
public:
    explicit RandomSource(std::uint64_t seed) : engine_(seed), seed_(seed) {}

    std::uint64_t seed() const { return seed_; }

    RandomSource fork(std::uint64_t a, std::uint64_t b = 0, std::uint64_t c = 0,
                      std::uint64_t d = 0) const {
        std::uint64_t s = seed_;
        s = mix64(s, a);
        s = mix64(s, b);
        s = mix64(s, c);
        s = mix64(s, d);
        return RandomSource(s);
    }

    std::uint64_t next_u64() { return engine_(); }

    // Uniform integer in [0, n).
    std::uint64_t uniform_index(std::uint64_t n) {
        const std::uint64_t limit = std::uint64_t(-1) - std::uint64_t(-1) % n;
        std::uint64_t x;
        do {
            x = next_u64();
        } while (x >= limit);
        return x % n;
    }

    // Uniform real in [0, 1) with 53 bits of precision.
    double uniform_real() {
        return double(next_u64() >> 11) * 0x1.0p-53;
    }

    bool bernoulli(double p) { return uniform_real() < p; }

private:
    std::mt19937_64 engine_;
    std::uint64_t seed_;
};

}  // namespace msqpc
