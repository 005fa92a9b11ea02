#pragma once

// Identity and closeness testers for product distributions over {0,1}^n,
// with their preprocessing wrappers and the Poissonized count machinery.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "bnprop/bayes_net.hpp"
#include "bnprop/errors.hpp"
#include "bnprop/rng.hpp"
#include "bnprop/sampling.hpp"
#include "bnprop/verdict.hpp"

namespace bnprop {

// ---- preprocessing ---------------------------------------------------------

// Flip every coordinate whose reference mean exceeds 1/2; an involution that
// preserves all distances when applied to both the reference and the samples.
struct FlipNormalization {
    ProductSpec q;              // all means <= 1/2
    std::uint64_t flip_mask = 0;
};

inline FlipNormalization flip_normalize(const ProductSpec& q) {
    q.validate();
    FlipNormalization out;
    out.q = q;
    for (int i = 0; i < q.n(); ++i)
        if (q.means[static_cast<std::size_t>(i)] > 0.5) {
            out.q.means[static_cast<std::size_t>(i)] = 1.0 - q.means[static_cast<std::size_t>(i)];
            out.flip_mask |= std::uint64_t{1} << i;
        }
    return out;
}

class FlippedSource final : public SampleSource {
  public:
    FlippedSource(SampleSource& inner, std::uint64_t mask) : inner_(&inner), mask_(mask) {}
    int n() const override { return inner_->n(); }
    std::uint64_t next() override { return inner_->next() ^ mask_; }

  private:
    SampleSource* inner_;
    std::uint64_t mask_;
};

// Re-randomizes each coordinate independently with probability 2*gamma_0,
// where gamma_0 = eps/(16n); the result is a gamma_0-balanced product source
// whose L1 shift from the original is at most eps/4. Exact transformed mean:
// (1 - 2 gamma_0) p + gamma_0 per coordinate.
class BalanceTransformSource final : public SampleSource {
  public:
    BalanceTransformSource(SampleSource& inner, double eps, std::uint64_t seed)
        : inner_(&inner), rng_(seed) {
        if (!(eps > 0.0)) throw InvalidParameter("balance transform needs eps > 0");
        gamma0_ = eps / (16.0 * inner.n());
        if (gamma0_ > 0.5) throw InvalidParameter("eps too large: 2*gamma_0 would exceed 1");
    }

    double gamma0() const { return gamma0_; }
    int n() const override { return inner_->n(); }

    std::uint64_t next() override {
        std::uint64_t row = inner_->next();
        if (gamma0_ == 0.0) return row;
        for (int i = 0; i < n(); ++i)
            if (rng_.bernoulli(2.0 * gamma0_)) {
                if (rng_.bernoulli(0.5))
                    row |= std::uint64_t{1} << i;
                else
                    row &= ~(std::uint64_t{1} << i);
            }
        return row;
    }

  private:
    SampleSource* inner_;
    Rng rng_;
    double gamma0_ = 0.0;
};

inline std::vector<double> balance_transform_means(const std::vector<double>& p, double eps) {
    const double g = eps / (16.0 * p.size());
    std::vector<double> out(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) out[i] = (1.0 - 2.0 * g) * p[i] + g;
    return out;
}

// ---- identity tester -------------------------------------------------------

struct ProductIdentityOptions {
    double constant = 2716.0; // sample-size constant; override for experiments
    std::uint64_t seed = 0;   // drives the Poisson draws
};

inline std::uint64_t product_identity_sample_size(int n, double eps, double constant = 2716.0) {
    return static_cast<std::uint64_t>(std::ceil(constant * std::sqrt(static_cast<double>(n)) / (eps * eps)));
}

// Chi-square style statistic sum_i ((W_i - m q_i)^2 - W_i) / (q_i (1 - q_i))
// from per-coordinate one-counts W_i.
inline double product_identity_statistic(const std::vector<double>& q,
                                         const std::vector<double>& one_counts, double m) {
    double w = 0.0;
    for (std::size_t i = 0; i < q.size(); ++i) {
        const double d = one_counts[i] - m * q[i];
        w += (d * d - one_counts[i]) / (q[i] * (1.0 - q[i]));
    }
    return w;
}

// Identity test of an unknown product source against the explicit mean vector
// q, which must be preprocessed into (0, 1/2]^n (see flip_normalize /
// BalanceTransformSource). Per-coordinate counts are Poissonized; the run
// rejects outright when some Poisson budget exceeds 2m.
inline Verdict product_identity_test(const ProductSpec& q, SampleSource& source, double eps,
                                     const ProductIdentityOptions& opts = {}) {
    q.validate();
    if (!(eps > 0.0 && eps < 1.0)) throw InvalidParameter("eps must lie in (0,1)");
    if (q.n() != source.n()) throw InvalidParameter("reference and source dimensions differ");
    for (double v : q.means)
        if (v <= 0.0 || v > 0.5)
            throw InvalidParameter("identity tester needs q_i in (0, 1/2]; flip-normalize first");

    const std::uint64_t m = product_identity_sample_size(q.n(), eps, opts.constant);
    const double tau = 0.25 * eps * eps;
    const double md = static_cast<double>(m);
    const double threshold = tau * md * md;

    Rng rng(opts.seed);
    std::vector<std::uint64_t> budgets(static_cast<std::size_t>(q.n()));
    std::uint64_t max_budget = 0;
    for (auto& b : budgets) {
        b = static_cast<std::uint64_t>(rng.poisson(md));
        max_budget = std::max(max_budget, b);
    }
    if (max_budget > 2 * m) return forced_reject(threshold, threshold, 0, "poisson-overflow");

    std::vector<double> one_counts(static_cast<std::size_t>(q.n()), 0.0);
    for (std::uint64_t t = 0; t < max_budget; ++t) {
        const std::uint64_t row = source.next();
        for (int i = 0; i < q.n(); ++i)
            if (t < budgets[static_cast<std::size_t>(i)])
                one_counts[static_cast<std::size_t>(i)] += (row >> i) & 1u;
    }
    const double w = product_identity_statistic(q.means, one_counts, md);
    return make_verdict(w >= threshold, w, threshold, max_budget);
}

// ---- closeness tester ------------------------------------------------------

struct ProductClosenessOptions {
    // Calibrated so the fixed thresholds below clear the null fluctuation
    // sqrt(2n) at desk scales; override to trade samples for error rates.
    double constant = 20000.0;
    std::uint64_t seed = 0;
};

inline std::uint64_t product_closeness_sample_size(int n, double eps, double constant) {
    const double nn = static_cast<double>(n);
    return static_cast<std::uint64_t>(
        std::ceil(constant * std::max(std::sqrt(nn) / (eps * eps), std::pow(nn, 0.75) / eps)));
}

// One heavy-bucket summand ((W-V)^2 - (W+V)) / (W+V), zero on empty counts.
inline double closeness_heavy_term(double w, double v) {
    const double s = w + v;
    if (s <= 0.0) return 0.0;
    const double d = w - v;
    return (d * d - s) / s;
}

// Two-sample closeness test between unknown product sources. Stages:
// preprocessing (mean estimates to +-1/64; reject on discrepancy > 1/32; swap
// coordinates whose estimate exceeds 43/64), a bucket split into coordinates
// seen / never seen set to one over m samples, then the Poissonized heavy and
// light chi-square statistics at their fixed thresholds.
inline Verdict product_closeness_test(SampleSource& source_p, SampleSource& source_q, double eps,
                                      int n, const ProductClosenessOptions& opts = {}) {
    if (!(eps > 0.0 && eps < 1.0)) throw InvalidParameter("eps must lie in (0,1)");
    if (source_p.n() != n || source_q.n() != n) throw InvalidParameter("source dimension mismatch");

    std::uint64_t used = 0;

    // Preprocessing: estimate all means to +-1/64 (overall error prob <= 1/10).
    const auto pre_m = static_cast<std::uint64_t>(
        std::ceil(2048.0 * std::log(40.0 * std::max(n, 2))));
    std::vector<double> phat(static_cast<std::size_t>(n), 0.0), qhat(static_cast<std::size_t>(n), 0.0);
    for (std::uint64_t t = 0; t < pre_m; ++t) {
        const std::uint64_t rp = source_p.next(), rq = source_q.next();
        for (int i = 0; i < n; ++i) {
            phat[static_cast<std::size_t>(i)] += (rp >> i) & 1u;
            qhat[static_cast<std::size_t>(i)] += (rq >> i) & 1u;
        }
    }
    used += 2 * pre_m;
    std::uint64_t swap_mask = 0;
    for (int i = 0; i < n; ++i) {
        phat[static_cast<std::size_t>(i)] /= static_cast<double>(pre_m);
        qhat[static_cast<std::size_t>(i)] /= static_cast<double>(pre_m);
        const double disc = std::fabs(phat[static_cast<std::size_t>(i)] - qhat[static_cast<std::size_t>(i)]);
        if (disc > 1.0 / 32.0)
            return forced_reject(disc, 1.0 / 32.0, used, "mean-discrepancy", "preprocess");
        if (phat[static_cast<std::size_t>(i)] > 43.0 / 64.0) swap_mask |= std::uint64_t{1} << i;
    }

    const std::uint64_t m = product_closeness_sample_size(n, eps, opts.constant);
    const double md = static_cast<double>(m);
    const double heavy_threshold = md * eps * eps / 12000.0;
    // W_light estimates m^2 ||p_V' - q_V'||_2^2, so its threshold carries m^2.
    const double light_threshold = md * md * eps * eps / (600.0 * static_cast<double>(n));

    Rng rng(opts.seed);
    std::vector<std::uint64_t> bp(static_cast<std::size_t>(n)), bq(static_cast<std::size_t>(n));
    std::uint64_t max_p = 0, max_q = 0;
    for (int i = 0; i < n; ++i) {
        bp[static_cast<std::size_t>(i)] = static_cast<std::uint64_t>(rng.poisson(md));
        bq[static_cast<std::size_t>(i)] = static_cast<std::uint64_t>(rng.poisson(md));
        max_p = std::max(max_p, bp[static_cast<std::size_t>(i)]);
        max_q = std::max(max_q, bq[static_cast<std::size_t>(i)]);
    }

    // Bucket split: U' = coordinates seen set to one at least once among m
    // samples from each source (after swaps), V' = the rest.
    std::uint64_t seen = 0;
    for (std::uint64_t t = 0; t < m; ++t) {
        seen |= source_p.next() ^ swap_mask;
        seen |= source_q.next() ^ swap_mask;
    }
    seen &= (n >= 64) ? ~std::uint64_t{0} : ((std::uint64_t{1} << n) - 1);
    used += 2 * m;

    if (std::max(max_p, max_q) > 2 * m)
        return forced_reject(heavy_threshold, heavy_threshold, used, "poisson-overflow");

    auto poissonized_counts = [&](SampleSource& src, const std::vector<std::uint64_t>& budgets,
                                  std::uint64_t rounds, std::uint64_t mask) {
        std::vector<double> ones(static_cast<std::size_t>(n), 0.0);
        for (std::uint64_t t = 0; t < rounds; ++t) {
            const std::uint64_t row = src.next() ^ swap_mask;
            if (!(row & mask)) continue;
            for (int i = 0; i < n; ++i)
                if (((mask >> i) & 1u) && t < budgets[static_cast<std::size_t>(i)])
                    ones[static_cast<std::size_t>(i)] += (row >> i) & 1u;
        }
        return ones;
    };

    // Heavy bucket.
    double w_heavy = 0.0;
    if (seen != 0) {
        const auto wp = poissonized_counts(source_p, bp, max_p, seen);
        const auto wq = poissonized_counts(source_q, bq, max_q, seen);
        used += max_p + max_q;
        for (int i = 0; i < n; ++i)
            if ((seen >> i) & 1u)
                w_heavy += closeness_heavy_term(wp[static_cast<std::size_t>(i)],
                                                wq[static_cast<std::size_t>(i)]);
    }
    if (w_heavy >= heavy_threshold)
        return make_verdict(true, w_heavy, heavy_threshold, used, "statistic");

    // Light bucket: unnormalized collision statistic.
    const std::uint64_t full = (n >= 64) ? ~std::uint64_t{0} : ((std::uint64_t{1} << n) - 1);
    const std::uint64_t light = full & ~seen;
    double w_light = 0.0;
    if (light != 0) {
        const auto wp = poissonized_counts(source_p, bp, max_p, light);
        const auto wq = poissonized_counts(source_q, bq, max_q, light);
        used += max_p + max_q;
        for (int i = 0; i < n; ++i)
            if ((light >> i) & 1u) {
                const double d = wp[static_cast<std::size_t>(i)] - wq[static_cast<std::size_t>(i)];
                w_light += d * d - (wp[static_cast<std::size_t>(i)] + wq[static_cast<std::size_t>(i)]);
            }
    }
    return make_verdict(w_light >= light_threshold, w_light, light_threshold, used, "statistic");
}

// ---- tolerant-testing reduction --------------------------------------------

// Maps a distribution over [n] to the product distribution of Poissonized
// occupancy indicators: coordinate i has mean 1 - exp(-delta * p_i).
inline ProductSpec tolerant_map_fdelta(const std::vector<double>& p, double delta) {
    if (!(delta > 0.0 && delta <= 1.0)) throw InvalidParameter("delta must lie in (0,1]");
    double total = 0.0;
    for (double v : p) {
        if (v < 0.0) throw InvalidParameter("probability vector has a negative entry");
        total += v;
    }
    if (std::fabs(total - 1.0) > 1e-9) throw InvalidParameter("probability vector does not sum to 1");
    ProductSpec out;
    out.means.reserve(p.size());
    for (double v : p) out.means.push_back(1.0 - std::exp(-delta * v));
    return out;
}

} // namespace bnprop
