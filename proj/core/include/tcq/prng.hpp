#ifndef TCQ_PRNG_HPP
#define TCQ_PRNG_HPP

#include <cstdint>

namespace tcq {

// Counter-based 64-bit generator (splitmix64 finalizer). The n-th draw of a
// stream depends only on (seed, n), so blocks and cells can be generated in
// any order, on any platform, with identical results.

inline constexpr std::uint64_t kGoldenGamma = 0x9E3779B97F4A7C15ull;

constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

/// n-th value of the stream identified by `seed`.
constexpr std::uint64_t stream_at(std::uint64_t seed, std::uint64_t n) noexcept {
    return mix64(seed + (n + 1) * kGoldenGamma);
}

/// Independent child seed for a keyed sub-stream (cell index, block index, ...).
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t key) noexcept {
    return mix64(seed ^ mix64(key + kGoldenGamma));
}

/// Map raw bits to a double strictly inside (0, 1).
constexpr double uniform_open(std::uint64_t bits) noexcept {
    return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
}

} // namespace tcq

#endif
