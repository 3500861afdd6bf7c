#pragma once

#include <cmath>
#include <cstdint>

#include "sigma/errors.hpp"

namespace sigma {

// ---------------------------------------------------------------------------
// Deterministic per-path random streams.
//
// Every path is driven by its own engine derived from (seed, path_index), so
// results are bit-identical for a fixed pair regardless of scheduling, and
// distinct path indices give statistically independent streams.
// ---------------------------------------------------------------------------

inline std::uint64_t splitmix64_next(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

struct RngStream {
    std::uint64_t seed = 0;
    std::uint64_t path_index = 0;
};

// xoshiro256++ (Blackman/Vigna), seeded through SplitMix64 as its authors
// recommend; each path_index starts a disjoint SplitMix64 subsequence.
class Xoshiro256pp {
  public:
    explicit Xoshiro256pp(RngStream stream) {
        std::uint64_t sm = stream.seed + 0x9E3779B97F4A7C15ULL * (stream.path_index + 1);
        for (auto& word : s_) word = splitmix64_next(sm);
    }

    std::uint64_t next() {
        const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    // uniform in [0,1) with 53-bit resolution
    double u01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    // uniform in (0,1] — safe as a log() argument
    double u01_open0() { return static_cast<double>((next() >> 11) + 1) * 0x1.0p-53; }

  private:
    static std::uint64_t rotl(std::uint64_t x, int k) {
        return (x << k) | (x >> (64 - k));
    }
    std::uint64_t s_[4];
};

// ---------------------------------------------------------------------------
// Standard normal sampling: 128-layer ziggurat (Marsaglia–Tsang layout with
// Doornik's table recursion). One 64-bit draw covers layer index and mantissa;
// ~1.03 draws per variate on average.
// ---------------------------------------------------------------------------

namespace detail {

struct ZigguratTables {
    static constexpr int kLayers = 128;
    static constexpr double kR = 3.442619855899;
    static constexpr double kV = 9.91256303526217e-3;
    double x[kLayers + 1];
    double ratio[kLayers];

    ZigguratTables() {
        double f = std::exp(-0.5 * kR * kR);
        x[0] = kV / f; // virtual base-strip width
        x[1] = kR;
        x[kLayers] = 0.0;
        for (int i = 2; i < kLayers; ++i) {
            x[i] = std::sqrt(-2.0 * std::log(kV / x[i - 1] + f));
            f = std::exp(-0.5 * x[i] * x[i]);
        }
        for (int i = 0; i < kLayers; ++i) ratio[i] = x[i + 1] / x[i];
    }
};

inline const ZigguratTables& ziggurat_tables() {
    static const ZigguratTables tables;
    return tables;
}

inline double normal_tail(Xoshiro256pp& rng, double rmin, bool negative) {
    double x, y;
    do {
        x = std::log(rng.u01_open0()) / rmin;
        y = std::log(rng.u01_open0());
    } while (-2.0 * y < x * x);
    return negative ? x - rmin : rmin - x;
}

} // namespace detail

inline double normal_draw(Xoshiro256pp& rng) {
    const auto& zt = detail::ziggurat_tables();
    for (;;) {
        const std::uint64_t bits = rng.next();
        const int i = static_cast<int>(bits & 0x7F);
        const double u = static_cast<double>(bits >> 11) * 0x1.0p-52 - 1.0; // (-1,1)
        if (std::fabs(u) < zt.ratio[i]) return u * zt.x[i];
        if (i == 0) return detail::normal_tail(rng, detail::ZigguratTables::kR, u < 0);
        const double val = u * zt.x[i];
        const double f0 = std::exp(-0.5 * (zt.x[i] * zt.x[i] - val * val));
        const double f1 = std::exp(-0.5 * (zt.x[i + 1] * zt.x[i + 1] - val * val));
        if (f1 + rng.u01() * (f0 - f1) < 1.0) return val;
    }
}

// ---------------------------------------------------------------------------
// Gamma and Poisson draws (exact-transition Bessel oracle needs both).
// ---------------------------------------------------------------------------

// Marsaglia–Tsang squeeze method; shape > 0, scale > 0.
inline double gamma_draw(Xoshiro256pp& rng, double shape, double scale) {
    if (!(shape > 0.0) || !(scale > 0.0))
        throw domain_error("gamma_draw: shape and scale must be positive");
    if (shape < 1.0) {
        // boost: Gamma(a) = Gamma(a+1) * U^{1/a}
        const double u = rng.u01_open0();
        return gamma_draw(rng, shape + 1.0, scale) * std::pow(u, 1.0 / shape);
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
        double z, v;
        do {
            z = normal_draw(rng);
            v = 1.0 + c * z;
        } while (v <= 0.0);
        v = v * v * v;
        const double u = rng.u01_open0();
        if (u < 1.0 - 0.0331 * (z * z) * (z * z)) return scale * d * v;
        if (std::log(u) < 0.5 * z * z + d * (1.0 - v + std::log(v))) return scale * d * v;
    }
}

// Exact Poisson by multiplicative inversion; large means split recursively
// (a sum of independent Poissons is Poisson, so the law is preserved exactly).
inline std::uint64_t poisson_draw(Xoshiro256pp& rng, double mean) {
    if (mean < 0.0) throw domain_error("poisson_draw: mean must be >= 0");
    if (mean == 0.0) return 0;
    if (mean > 50.0)
        return poisson_draw(rng, mean * 0.5) + poisson_draw(rng, mean - mean * 0.5);
    const double limit = std::exp(-mean);
    std::uint64_t k = 0;
    double prod = rng.u01_open0();
    while (prod > limit) {
        ++k;
        prod *= rng.u01_open0();
    }
    return k;
}

} // namespace sigma
