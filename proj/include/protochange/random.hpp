#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace protochange {

/// mt19937_64 with portable draws. The std distributions are
/// implementation-defined, so they are avoided to keep results bit-identical
/// across standard libraries.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }

    /// Uniform in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    /// Uniform integer in [0, n) by rejection sampling; n must be > 0.
    std::uint64_t below(std::uint64_t n)
    {
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t x;
        do {
            x = engine_();
        } while (x >= limit);
        return x % n;
    }

    /// Standard normal via Box-Muller (used by fixtures and tests).
    double normal();

private:
    std::mt19937_64 engine_;
};

/// Deterministic per-stage seed split from one root seed.
std::uint64_t derive_seed(std::uint64_t root, std::string_view stage) noexcept;

}  // namespace protochange
