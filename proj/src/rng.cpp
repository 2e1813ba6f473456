#include "gml2o/rng.hpp"

namespace gml2o {

namespace {

std::uint64_t splitmix64(std::uint64_t z) noexcept {
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

}  // namespace

std::uint64_t purpose_hash(std::string_view purpose) noexcept {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (unsigned char ch : purpose) {
        h ^= ch;
        h *= 0x100000001B3ULL;
    }
    return h;
}

std::uint64_t derive_stream_key(std::uint64_t seed, std::uint64_t member,
                                std::string_view purpose) noexcept {
    return splitmix64(splitmix64(splitmix64(seed) ^ member) ^ purpose_hash(purpose));
}

}  // namespace gml2o
