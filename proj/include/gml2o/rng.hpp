#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace gml2o {

using Rng = std::mt19937_64;

/// 64-bit FNV-1a hash of a purpose label.
std::uint64_t purpose_hash(std::string_view purpose) noexcept;

/// Stream key derivation used for every random stream in the toolkit:
///
///     key = splitmix64(splitmix64(splitmix64(seed) ^ member) ^ fnv1a(purpose))
///
/// Each (seed, member, purpose) triple maps to an independent mt19937_64
/// stream, so parallel runs reproduce regardless of scheduling.
std::uint64_t derive_stream_key(std::uint64_t seed, std::uint64_t member,
                                std::string_view purpose) noexcept;

inline Rng make_rng(std::uint64_t seed, std::uint64_t member, std::string_view purpose) {
    return Rng(derive_stream_key(seed, member, purpose));
}

}  // namespace gml2o
