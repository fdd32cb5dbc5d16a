#include "rupnet/rng.hpp"

#include <cmath>
#include <numbers>

namespace rupnet {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t h) {
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

Rng::Rng(std::uint64_t seed) : seed_(seed), engine_(splitmix64(seed)) {}

Rng Rng::derive(std::string_view purpose, std::uint64_t a, std::uint64_t b) const {
    std::uint64_t s = splitmix64(seed_ ^ fnv1a64(purpose));
    s = splitmix64(s ^ a);
    s = splitmix64(s ^ (b * 0x9e3779b97f4a7c15ULL));
    return Rng(s);
}

std::uint64_t Rng::next_u64() { return engine_(); }

double Rng::uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

double Rng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

std::uint64_t Rng::below(std::uint64_t n) {
    if (n == 0) throw InvalidArgument("Rng::below: n must be positive");
    // Rejection sampling removes modulo bias.
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
    std::uint64_t x;
    do {
        x = engine_();
    } while (x >= limit);
    return x % n;
}

double Rng::normal() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    double u1;
    do {
        u1 = uniform();
    } while (u1 <= 0.0);
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
}

template <typename T>
BasicTensor<T> rng_normal(Rng& rng, const Shape& shape, double mean, double stddev) {
    if (!(stddev >= 0.0)) throw InvalidArgument("rng_normal: std must be >= 0");
    BasicTensor<T> out(shape);
    for (auto& v : out.values()) v = static_cast<T>(mean + stddev * rng.normal());
    return out;
}

template <typename T>
BasicTensor<T> rng_uniform(Rng& rng, const Shape& shape, double lo, double hi) {
    BasicTensor<T> out(shape);
    for (auto& v : out.values()) v = static_cast<T>(rng.uniform(lo, hi));
    return out;
}

template BasicTensor<float> rng_normal(Rng&, const Shape&, double, double);
template BasicTensor<double> rng_normal(Rng&, const Shape&, double, double);
template BasicTensor<float> rng_uniform(Rng&, const Shape&, double, double);
template BasicTensor<double> rng_uniform(Rng&, const Shape&, double, double);

}  // namespace rupnet
