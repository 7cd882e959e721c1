#pragma once

#include <cstddef>
#include <cstdint>
#include <random>

namespace qsk {

/// Seedable random stream with platform-independent output.
///
/// The engine is std::mt19937_64, whose output sequence is fixed by the
/// standard. The distributions are implemented here rather than taken from
/// <random> because the standard leaves their algorithms unspecified:
///   - uniform01: top 53 bits of one engine draw, scaled to [0, 1).
///   - uniform_index(n): one draw per attempt, rejecting draws below
///     2^64 mod n, result is draw mod n.
///   - normal: Box-Muller from two uniform01 draws, cosine branch only.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    /// Uniform integer in [0, n). Requires n > 0.
    std::size_t uniform_index(std::size_t n);

    double normal();

private:
    std::mt19937_64 engine_;
};

} // namespace qsk
