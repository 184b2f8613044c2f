#pragma once

#include <cstdint>
#include <numeric>
#include <random>
#include <vector>

namespace iscm {

// Seeded random stream. Substreams are derived from the original seed (not
// the evolving generator state), so replicate r of a run always sees the
// same stream regardless of what was drawn in between.
class RandomStream {
public:
    explicit RandomStream(std::uint64_t seed) : seed_(seed), gen_(mix(seed)) {}

    std::uint64_t seed() const { return seed_; }

    // Independent stream for substream `salt` (replicate index, stage id, ...).
    RandomStream derive(std::uint64_t salt) const {
        return RandomStream(mix(seed_ + 0x9E3779B97F4A7C15ULL * (salt + 1)));
    }

    double uniform(double lo, double hi) {
        return std::uniform_real_distribution<double>(lo, hi)(gen_);
    }

    double normal() { return std::normal_distribution<double>(0.0, 1.0)(gen_); }

    // Uniform on {-1, +1}.
    double sign() { return (gen_() & 1u) ? 1.0 : -1.0; }

    // Uniform integer in [lo, hi], inclusive.
    int uniform_int(int lo, int hi) {
        return std::uniform_int_distribution<int>(lo, hi)(gen_);
    }

    std::uint64_t uniform_u64() { return gen_(); }

    // Uniform random permutation of 0..n-1 (Fisher-Yates).
    std::vector<int> permutation(int n) {
        std::vector<int> p(static_cast<std::size_t>(n));
        std::iota(p.begin(), p.end(), 0);
        for (int i = n - 1; i > 0; --i) {
            std::swap(p[static_cast<std::size_t>(i)],
                      p[static_cast<std::size_t>(uniform_int(0, i))]);
        }
        return p;
    }

    std::mt19937_64& generator() { return gen_; }

private:
    // splitmix64 finalizer; decorrelates nearby seeds.
    static std::uint64_t mix(std::uint64_t x) {
        x += 0x9E3779B97F4A7C15ULL;
        x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
        x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
        return x ^ (x >> 31);
    }

    std::uint64_t seed_;
    std::mt19937_64 gen_;
};

}  // namespace iscm
