#pragma once

#include <cstdint>
#include <random>

namespace colorspace {

using Rng = std::mt19937_64;

/// splitmix64 finalizer; used only to derive independent stream seeds.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Seed of the stream identified by (seed, domain, index). Streams for
/// different indices are independent, so results never depend on the order
/// in which streams are consumed.
constexpr std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t domain, std::uint64_t index = 0) noexcept {
    return mix64(mix64(mix64(seed) ^ domain) + index);
}

inline Rng make_stream(std::uint64_t seed, std::uint64_t domain, std::uint64_t index = 0) {
    return Rng(stream_seed(seed, domain, index));
}

// Stream domains.
namespace streams {
inline constexpr std::uint64_t variants = 0x76617269616e74ULL;
inline constexpr std::uint64_t init = 0x696e6974ULL;
inline constexpr std::uint64_t stage1 = 0x737461676531ULL;
inline constexpr std::uint64_t stage2 = 0x737461676532ULL;
inline constexpr std::uint64_t holdout = 0x686f6c646f7574ULL;
inline constexpr std::uint64_t swd_patch = 0x7061746368ULL;
inline constexpr std::uint64_t swd_proj = 0x70726f6aULL;
inline constexpr std::uint64_t swd_subsample = 0x737562ULL;
inline constexpr std::uint64_t dequantize = 0x6465717561ULL;
}  // namespace streams

}  // namespace colorspace
