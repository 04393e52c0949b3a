#include "pseudohaptic/random.hpp"

#include <cmath>
#include <numbers>

namespace pseudohaptic {

double Rng::normal()
{
    const double u1 = uniform01();
    const double u2 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::uint64_t Rng::below(std::uint64_t bound)
{
    if (bound <= 1) {
        return 0;
    }
    // 2^64 mod bound; values below it would over-represent the low residues.
    const std::uint64_t threshold = (0 - bound) % bound;
    std::uint64_t x = m_engine();
    while (x < threshold) {
        x = m_engine();
    }
    return x % bound;
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream)
{
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

}  // namespace pseudohaptic
