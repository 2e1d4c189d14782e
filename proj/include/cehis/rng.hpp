#pragma once

#include <cstdint>

namespace cehis {

// SplitMix64. Used for everything seeded so that corpora and baselines are
// reproducible across platforms (std::uniform_* distributions are not).
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // Uniform in [0, 1), 53-bit resolution.
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    // Uniform in [0, n). Modulo bias is irrelevant at these scales; determinism is not.
    std::uint64_t below(std::uint64_t n) { return n == 0 ? 0 : next() % n; }

    std::int32_t index(std::int32_t n) { return static_cast<std::int32_t>(below(static_cast<std::uint64_t>(n))); }

private:
    std::uint64_t state_;
};

} // namespace cehis
