#pragma once

// Known-structure Bayes-net learner: empirical conditional means over
// m = O((2^d n / eps^2) log(2^d n)) samples, with undersampled configurations
// zeroed. The learning baseline the testers are measured against.

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "bnprop/bayes_net.hpp"
#include "bnprop/errors.hpp"
#include "bnprop/sampling.hpp"

namespace bnprop {

struct LearnerOptions {
    double m_constant = 4.0;   // multiplier on (2^d n / eps^2) ln(2^d n)
    double tau_constant = 8.0; // multiplier on ln(n)/eps for the zeroing cutoff
};

struct LearnedCpt {
    // Estimates live in the flipped orientation (all targeted conditionals
    // biased low); zeroed configurations hold estimate 0.
    std::vector<std::vector<double>> estimate;
    std::vector<std::vector<bool>> zeroed;
};

struct LearnResult {
    BayesNet net; // estimates mapped back to the original orientation
    LearnedCpt raw;
    std::uint64_t m = 0;
    std::uint64_t tau = 0;
    std::vector<int> flipped_coords;
    std::uint64_t zeroed_configs = 0;
    std::uint64_t samples_used = 0;
};

// A configuration (i, a) is light when p_{i,a} Pr[Pi_{i,a}] <= eps/(2 n 2^d);
// zeroing those costs little L1. Exposed for the enumeration checks.
inline double light_config_threshold(int n, int d, double eps) {
    return eps / (2.0 * static_cast<double>(n) * std::pow(2.0, d));
}

inline LearnResult learn_known_structure(const DagStructure& s, SampleSource& source, double eps,
                                         std::uint64_t seed, const LearnerOptions& opts = {}) {
    if (!(eps > 0.0 && eps < 1.0)) throw InvalidParameter("eps must lie in (0,1)");
    if (source.n() != s.n) throw InvalidParameter("source dimension does not match structure");
    (void)seed; // sources carry their own randomness; kept for interface stability
    const int n = s.n, d = s.max_in_degree;
    const double pow2d = std::pow(2.0, d);

    // Orientation pass: flip coordinates whose marginal looks above 1/2.
    const auto probe = static_cast<std::uint64_t>(
        std::ceil(48.0 * std::log(20.0 * std::max(n, 2))));
    std::vector<std::uint64_t> ones(static_cast<std::size_t>(n), 0);
    for (std::uint64_t t = 0; t < probe; ++t) {
        const std::uint64_t x = source.next();
        for (int i = 0; i < n; ++i) ones[static_cast<std::size_t>(i)] += (x >> i) & 1u;
    }
    std::uint64_t flip_mask = 0;
    LearnResult out;
    for (int i = 0; i < n; ++i)
        if (2 * ones[static_cast<std::size_t>(i)] > probe) {
            flip_mask |= std::uint64_t{1} << i;
            out.flipped_coords.push_back(i);
        }

    out.m = static_cast<std::uint64_t>(
        std::ceil(opts.m_constant * (pow2d * n / (eps * eps)) * std::log(pow2d * n)));
    out.tau = static_cast<std::uint64_t>(
        std::ceil(opts.tau_constant * std::log(static_cast<double>(std::max(n, 2))) / eps));
    out.samples_used = probe + out.m;

    // Counting pass in the flipped orientation. A uniform net over s supplies
    // the configuration indexing.
    std::vector<std::vector<double>> half;
    half.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
        half.emplace_back(std::size_t{1} << s.parents[i].size(), 0.5);
    const BayesNet ref(s, std::move(half));

    std::vector<std::vector<std::uint64_t>> seen(static_cast<std::size_t>(n)),
        hits(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        const auto cc = std::size_t{1} << s.parents[i].size();
        seen[static_cast<std::size_t>(i)].assign(cc, 0);
        hits[static_cast<std::size_t>(i)].assign(cc, 0);
    }
    for (std::uint64_t t = 0; t < out.m; ++t) {
        const std::uint64_t x = source.next() ^ flip_mask;
        for (int i = 0; i < n; ++i) {
            const std::uint32_t a = ref.parent_assignment(i, x);
            ++seen[static_cast<std::size_t>(i)][a];
            hits[static_cast<std::size_t>(i)][a] += (x >> i) & 1u;
        }
    }

    out.raw.estimate.resize(static_cast<std::size_t>(n));
    out.raw.zeroed.resize(static_cast<std::size_t>(n));
    std::vector<std::vector<double>> cpt(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        const auto cc = std::size_t{1} << s.parents[i].size();
        out.raw.estimate[static_cast<std::size_t>(i)].assign(cc, 0.0);
        out.raw.zeroed[static_cast<std::size_t>(i)].assign(cc, false);
        cpt[static_cast<std::size_t>(i)].assign(cc, 0.0);
        for (std::size_t a = 0; a < cc; ++a) {
            double est = 0.0;
            if (seen[static_cast<std::size_t>(i)][a] < out.tau) {
                out.raw.zeroed[static_cast<std::size_t>(i)][a] = true;
                ++out.zeroed_configs;
            } else {
                est = static_cast<double>(hits[static_cast<std::size_t>(i)][a]) /
                      static_cast<double>(seen[static_cast<std::size_t>(i)][a]);
            }
            out.raw.estimate[static_cast<std::size_t>(i)][a] = est;

            // Map back to the original orientation: parent flips permute the
            // assignment, a flipped child complements the estimate.
            std::uint32_t orig_a = static_cast<std::uint32_t>(a);
            const auto& ps = s.parents[i];
            for (std::size_t k = 0; k < ps.size(); ++k)
                if ((flip_mask >> ps[k]) & 1u) orig_a ^= std::uint32_t{1} << k;
            const double val = ((flip_mask >> i) & 1u) ? 1.0 - est : est;
            cpt[static_cast<std::size_t>(i)][orig_a] = val;
        }
    }
    out.net = BayesNet(s, std::move(cpt));
    return out;
}

} // namespace bnprop
