#pragma once

// Deterministic hashing and random streams.
//
// Every random draw in the library comes from SplitMix64 (Steele, Lea and
// Flood's 64-bit generator, the seeding generator of the xoshiro family):
//
//   state += 0x9E3779B97F4A7C15
//   z = state
//   z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
//   z = (z ^ (z >> 27)) * 0x94D049BB133111EB
//   return z ^ (z >> 31)
//
// Uniform reals take the top 53 bits: (next() >> 11) * 2^-53.
//
// Streams are split by hashing a scope label with FNV-1a 64 and folding it
// into the parent seed with derive_seed(). The same scheme is easy to port,
// which keeps mock fixtures reproducible outside C++.

#include <cstdint>
#include <string>
#include <string_view>

namespace influence {

/// FNV-1a, 64-bit (offset basis 0xcbf29ce484222325, prime 0x100000001b3).
std::uint64_t fnv1a64(std::string_view bytes) noexcept;

/// Continue an FNV-1a hash over more bytes.
std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t state) noexcept;

/// The SplitMix64 output function applied to a single value.
std::uint64_t mix64(std::uint64_t x) noexcept;

/// Child seed for a named scope: mix64(parent ^ fnv1a64(scope)).
std::uint64_t derive_seed(std::uint64_t parent, std::string_view scope) noexcept;

/// Lowercase, zero-padded, 16 hex digits.
std::string to_hex(std::uint64_t value);

class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) noexcept : state_(seed) {}

    std::uint64_t next() noexcept;
    /// Uniform in [0, 1).
    double uniform() noexcept;
    /// Uniform integer in [0, bound); bound must be positive.
    std::uint64_t below(std::uint64_t bound) noexcept;

    std::uint64_t state() const noexcept { return state_; }

private:
    std::uint64_t state_;
};

}  // namespace influence
