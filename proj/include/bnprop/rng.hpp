#pragma once

// Deterministic RNG used everywhere: xoshiro256++ seeded through splitmix64.
// Poisson variates use CDF inversion below lambda = 30 and Hormann's PTRD
// transformed-rejection above, so a stream is reproducible from its seed alone.

#include <cmath>
#include <cstdint>

namespace bnprop {

// log(k!) without std::lgamma, which is not thread-safe on common libcs
// (it writes the global signgam). Exact table below 32, Stirling series above;
// relative error under 1e-12 everywhere, far below what rejection sampling needs.
inline double log_factorial(std::int64_t k) {
    static const double table[] = {
        0.0,
        0.0,
        0.6931471805599453,
        1.791759469228055,
        3.1780538303479458,
        4.787491742782046,
        6.579251212010101,
        8.525161361065415,
        10.60460290274525,
        12.801827480081469,
        15.104412573075516,
        17.502307845873887,
        19.987214495661885,
        22.552163853123425,
        25.19122118273868,
        27.89927138384089,
        30.671860106080672,
        33.50507345013689,
        36.39544520803305,
        39.339884187199495,
        42.335616460753485,
        45.38013889847691,
        48.47118135183523,
        51.60667556776438,
        54.78472939811232,
        58.00360522298052,
        61.261701761002,
        64.55753862700634,
        67.88974313718154,
        71.25703896716801,
        74.65823634883016,
        78.0922235533153,
    };
    if (k < 0) return 0.0;
    if (k < static_cast<std::int64_t>(sizeof table / sizeof table[0])) return table[k];
    const double x = static_cast<double>(k) + 1.0;
    const double inv = 1.0 / x;
    const double inv2 = inv * inv;
    return (x - 0.5) * std::log(x) - x + 0.9189385332046727 +
           inv * (1.0 / 12.0 - inv2 * (1.0 / 360.0 - inv2 / 1260.0));
}

inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Stateless mix of a seed and a stream tag; used to derive independent
// sub-streams (per trial, per source) from one base seed.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t s = seed + 0x632be59bd9b4e019ULL * (stream + 1);
    std::uint64_t a = splitmix64(s);
    return a ^ splitmix64(s);
}

class Rng {
  public:
    explicit Rng(std::uint64_t seed = 0) {
        std::uint64_t s = seed;
        for (auto& w : state_) w = splitmix64(s);
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    // Uniform in [0,1) with 53 random bits.
    double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    bool bernoulli(double p) { return next_double() < p; }

    // Uniform integer in [0, n).
    std::uint64_t next_below(std::uint64_t n) {
        // Lemire's multiply-shift with rejection for exact uniformity.
        std::uint64_t x = next_u64();
        __uint128_t m = static_cast<__uint128_t>(x) * n;
        auto lo = static_cast<std::uint64_t>(m);
        if (lo < n) {
            const std::uint64_t t = (0 - n) % n;
            while (lo < t) {
                x = next_u64();
                m = static_cast<__uint128_t>(x) * n;
                lo = static_cast<std::uint64_t>(m);
            }
        }
        return static_cast<std::uint64_t>(m >> 64);
    }

    std::int64_t poisson(double lambda) {
        if (lambda <= 0.0) return 0;
        if (lambda < 30.0) return poisson_inversion(lambda);
        return poisson_ptrd(lambda);
    }

  private:
    static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

    std::int64_t poisson_inversion(double lambda) {
        double p = std::exp(-lambda);
        double s = p;
        const double u = next_double();
        std::int64_t k = 0;
        while (u > s) {
            ++k;
            p *= lambda / static_cast<double>(k);
            s += p;
            if (k > 2000) break; // unreachable for lambda < 30
        }
        return k;
    }

    // PTRD: W. Hormann, "The transformed rejection method for generating
    // Poisson random variables", Insurance: Math. and Econ. 12 (1993).
    std::int64_t poisson_ptrd(double mu) {
        const double smu = std::sqrt(mu);
        const double b = 0.931 + 2.53 * smu;
        const double a = -0.059 + 0.02483 * b;
        const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
        const double v_r = 0.9277 - 3.6224 / (b - 2.0);
        const double log_mu = std::log(mu);
        for (;;) {
            double u = next_double() - 0.5;
            double v = next_double();
            const double us = 0.5 - std::fabs(u);
            const auto k = static_cast<std::int64_t>(std::floor((2.0 * a / us + b) * u + mu + 0.43));
            if (us >= 0.07 && v <= v_r) return k;
            if (k < 0 || (us < 0.013 && v > us)) continue;
            const double lhs = std::log(v * inv_alpha / (a / (us * us) + b));
            const double rhs = static_cast<double>(k) * log_mu - mu - log_factorial(k);
            if (lhs <= rhs) return k;
        }
    }

    std::uint64_t state_[4]{};
};

} // namespace bnprop
