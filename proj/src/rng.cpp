#include "qsk/rng.hpp"

#include <cmath>
#include <numbers>

namespace qsk {

std::size_t Rng::uniform_index(std::size_t n) {
    const std::uint64_t bound = static_cast<std::uint64_t>(n);
    const std::uint64_t threshold = (0 - bound) % bound; // 2^64 mod n
    for (;;) {
        const std::uint64_t r = engine_();
        if (r >= threshold) return static_cast<std::size_t>(r % bound);
    }
}

double Rng::normal() {
    const double u1 = 1.0 - uniform01(); // (0, 1]
    const double u2 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

} // namespace qsk
