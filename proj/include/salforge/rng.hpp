#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace salforge {

// 64-bit FNV-1a, used to fold substream labels into seeds.
constexpr std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

// splitmix64 finalizer; decorrelates nearby seed values.
constexpr std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

// Deterministic RNG with named substreams. Every consumer derives its own
// stream from (base seed, label, counters), so draw order in one place can
// never shift the values seen elsewhere. That keying makes runs reproducible
// and checkpoint resume bit-exact without serializing engine state.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(mix64(seed)) {}

    static Rng substream(std::uint64_t seed, std::string_view label,
                         std::uint64_t a = 0, std::uint64_t b = 0) {
        std::uint64_t h = mix64(seed ^ fnv1a64(label));
        h = mix64(h + a);
        h = mix64(h + b);
        return Rng(h);
    }

    std::uint64_t next_u64() { return engine_(); }

    // Uniform on [0, 1).
    double uniform() {
        return std::uniform_real_distribution<double>(0.0, 1.0)(engine_);
    }

    double uniform(double lo, double hi) {
        return std::uniform_real_distribution<double>(lo, hi)(engine_);
    }

    double normal(double mean = 0.0, double stddev = 1.0) {
        return std::normal_distribution<double>(mean, stddev)(engine_);
    }

    // Uniform integer on [0, n).
    std::int64_t uniform_int(std::int64_t n) {
        return std::uniform_int_distribution<std::int64_t>(0, n - 1)(engine_);
    }

private:
    std::mt19937_64 engine_;
};

}  // namespace salforge
