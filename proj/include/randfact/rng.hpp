#pragma once

#include <cstdint>
#include <string>

#include "randfact/common.hpp"

namespace randfact {

/// Counter-based deterministic generator. Draw i from a stream with key K is
/// mix(K + GOLDEN * (i + 1)) where mix is the SplitMix64 finalizer, so streams
/// are O(1)-seekable and bitwise reproducible on every platform. Composed
/// operations derive disjoint substreams from (seed, operation tag):
/// K = mix(seed XOR fnv1a64(tag)). Tags in use are listed in the README.
class Rng {
public:
    explicit Rng(std::uint64_t key) : key_(key) {}

    /// Stream for (seed, tag).
    static Rng substream(std::uint64_t seed, const std::string& tag);

    std::uint64_t next_u64();

    /// Uniform on the open interval (0, 1).
    double uniform01();

    /// Standard normal via Box-Muller; the second variate is cached.
    double normal();

    /// Uniform integer in [0, n) by rejection (no modulo bias).
    std::uint64_t below(std::uint64_t n);

private:
    std::uint64_t key_ = 0;
    std::uint64_t counter_ = 0;
    bool have_cached_ = false;
    double cached_ = 0.0;
};

/// SplitMix64 finalizer (public so tests can pin the scheme).
std::uint64_t splitmix_mix(std::uint64_t z);

/// FNV-1a 64-bit hash of a tag string.
std::uint64_t fnv1a64(const std::string& s);

} // namespace randfact
