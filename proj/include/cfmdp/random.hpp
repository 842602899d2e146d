#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <random>
#include <vector>

namespace cfmdp {

/// The one generator used everywhere. Distributions below are written out by
/// hand so that streams are bit-identical across standard libraries.
using Rng = std::mt19937_64;

/// SplitMix64 finalizer.
constexpr std::uint64_t mix_seed(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

/// Derives an independent child seed from a parent seed and stream coordinates,
/// e.g. derive_seed(run_seed, {trial, t, s, a}).
inline std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> stream) {
    std::uint64_t h = mix_seed(seed);
    for (std::uint64_t coordinate : stream) {
        h = mix_seed(h ^ mix_seed(coordinate + 0x632BE59BD9B4E019ull));
    }
    return h;
}

inline Rng make_rng(std::uint64_t seed) { return Rng(mix_seed(seed)); }

/// Uniform on [0, 1).
inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

/// Uniform on the open interval (0, 1).
inline double uniform_open01(Rng& rng) {
    return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
}

inline double uniform(Rng& rng, double lo, double hi) { return lo + (hi - lo) * uniform01(rng); }

inline std::size_t uniform_index(Rng& rng, std::size_t n) {
    return static_cast<std::size_t>(uniform01(rng) * static_cast<double>(n)) % n;
}

/// Standard Gumbel(0, 1) draw.
inline double standard_gumbel(Rng& rng) { return -std::log(-std::log(uniform_open01(rng))); }

/// Gamma(shape, 1) by Marsaglia-Tsang, with the usual boost for shape < 1.
inline double gamma_draw(Rng& rng, double shape) {
    if (shape < 1.0) {
        return gamma_draw(rng, shape + 1.0) * std::pow(uniform_open01(rng), 1.0 / shape);
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
        // Box-Muller normal
        const double u1 = uniform_open01(rng);
        const double u2 = uniform01(rng);
        const double z = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
        double v = 1.0 + c * z;
        if (v <= 0.0) continue;
        v = v * v * v;
        const double u = uniform_open01(rng);
        if (std::log(u) < 0.5 * z * z + d - d * v + d * std::log(v)) return d * v;
    }
}

/// Symmetric Dirichlet(alpha) vector of length n.
inline std::vector<double> dirichlet(Rng& rng, std::size_t n, double alpha = 1.0) {
    std::vector<double> x(n);
    double total = 0.0;
    for (auto& xi : x) {
        xi = gamma_draw(rng, alpha);
        total += xi;
    }
    for (auto& xi : x) xi /= total;
    return x;
}

/// Index drawn from a probability vector (entries need not be normalized exactly).
template <class Range> std::size_t sample_categorical(Rng& rng, const Range& probs) {
    double total = 0.0;
    for (double p : probs) total += p;
    const double u = uniform01(rng) * total;
    double acc = 0.0;
    std::size_t last_positive = 0;
    std::size_t i = 0;
    for (double p : probs) {
        if (p > 0.0) {
            acc += p;
            last_positive = i;
            if (u < acc) return i;
        }
        ++i;
    }
    return last_positive;
}

} // namespace cfmdp
