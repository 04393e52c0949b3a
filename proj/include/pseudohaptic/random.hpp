#pragma once

#include <cstdint>
#include <random>

namespace pseudohaptic {

// Seeded source of uniform and normal draws.
//
// The engine is std::mt19937_64, whose output sequence is fixed by the C++
// standard. The conversions to real numbers are done here rather than through
// <random> distributions, whose algorithms are implementation-defined, so a
// given seed yields the same stream on every platform and standard library.
class Rng {
public:
    using result_type = std::uint64_t;

    explicit Rng(std::uint64_t seed = 0) : m_engine(seed) {}

    std::uint64_t next_u64() { return m_engine(); }

    // Uniform on the open interval (0, 1): 53 random bits, centred in their cell.
    double uniform01()
    {
        return (static_cast<double>(m_engine() >> 12) + 0.5) * 0x1.0p-52;
    }

    // Uniform on the open interval (-1, 1).
    double uniform_pm1() { return 2.0 * uniform01() - 1.0; }

    // Standard normal via the Box-Muller transform (cosine branch only, so each
    // call consumes exactly two engine outputs).
    double normal();

    // Unbiased integer in [0, bound) by rejection.
    std::uint64_t below(std::uint64_t bound);

    bool coin() { return (m_engine() >> 63) != 0; }

    // UniformRandomBitGenerator interface, for std::shuffle and friends.
    static constexpr result_type min() { return std::mt19937_64::min(); }
    static constexpr result_type max() { return std::mt19937_64::max(); }
    result_type operator()() { return m_engine(); }

    bool operator==(const Rng&) const = default;

private:
    std::mt19937_64 m_engine;
};

// SplitMix64 finaliser applied to (seed + golden-ratio * (stream + 1)).
// Used to derive independent per-participant and per-trial seeds from one
// run seed: derive_seed(s, i) is a bijection of s for every fixed i.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

// Fisher-Yates shuffle driven by Rng::below. std::shuffle is avoided because
// its use of the generator is unspecified.
template <typename It>
void shuffle(It first, It last, Rng& rng)
{
    const auto n = static_cast<std::uint64_t>(last - first);
    for (std::uint64_t i = n; i > 1; --i) {
        const auto j = rng.below(i);
        using std::swap;
        swap(first[static_cast<std::ptrdiff_t>(i - 1)], first[static_cast<std::ptrdiff_t>(j)]);
    }
}

}  // namespace pseudohaptic
