#pragma once

#include <cstdint>
#include <random>
#include <string_view>

#include "rupnet/tensor.hpp"

namespace rupnet {

/// Deterministic 64-bit generator (MT19937-64) with derived, independent streams.
///
/// Draws are produced from the raw 64-bit engine output only, never through
/// std::*_distribution, so sequences are identical across standard libraries.
/// derive() seeds a fresh generator from (seed, purpose, a, b) via SplitMix64,
/// which lets initialization, augmentation and data synthesis each own a stream
/// that is unaffected by draws made on the others.
class Rng {
public:
    explicit Rng(std::uint64_t seed = 0);

    std::uint64_t seed() const noexcept { return seed_; }

    Rng derive(std::string_view purpose, std::uint64_t a = 0, std::uint64_t b = 0) const;

    std::uint64_t next_u64();
    /// Uniform in [0, 1) with 53 bits of resolution.
    double uniform();
    double uniform(double lo, double hi);
    /// Uniform integer in [0, n). n must be > 0.
    std::uint64_t below(std::uint64_t n);
    /// Standard normal via the Box-Muller transform.
    double normal();

private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t h = 0xcbf29ce484222325ULL);

/// Tensor of i.i.d. normal draws. Throws InvalidArgument for negative std.
template <typename T>
BasicTensor<T> rng_normal(Rng& rng, const Shape& shape, double mean, double stddev);

/// Tensor of i.i.d. uniform draws in [lo, hi).
template <typename T>
BasicTensor<T> rng_uniform(Rng& rng, const Shape& shape, double lo, double hi);

}  // namespace rupnet
