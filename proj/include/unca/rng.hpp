#pragma once

#include <cstdint>

namespace unca {

// Deterministic xorshift64* generator. The emitted C generators embed the
// same update and the same uniform mapping, so a grid seeded here matches a
// grid seeded by generated code bit-for-bit at float32 resolution.
class Rng {
public:
    explicit Rng(uint64_t seed) : state_(mix(seed)) {
        if (state_ == 0) state_ = 1;
    }

    uint64_t next() {
        uint64_t x = state_;
        x ^= x >> 12;
        x ^= x << 25;
        x ^= x >> 27;
        state_ = x;
        return x * 0x2545F4914F6CDD1Dull;
    }

    // Uniform in [0, 1), 53-bit resolution.
    double uniform() { return static_cast<double>(next() >> 11) * (1.0 / 9007199254740992.0); }

    // Uniform in [-0.5, 0.5).
    double uniform_signed() { return uniform() - 0.5; }

    // Uniform integer in [lo, hi], inclusive.
    uint64_t uniform_int(uint64_t lo, uint64_t hi) {
        return lo + next() % (hi - lo + 1);
    }

    uint64_t state() const { return state_; }

private:
    // splitmix64 finalizer, decorrelates small consecutive seeds.
    static uint64_t mix(uint64_t x) {
        x += 0x9E3779B97F4A7C15ull;
        x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
        x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
        return x ^ (x >> 31);
    }

    uint64_t state_;
};

}  // namespace unca
