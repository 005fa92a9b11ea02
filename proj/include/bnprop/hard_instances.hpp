#pragma once

// Seeded generators for the adversarial families used to stress the testers,
// plus random balanced instances for the property suites. All are pure
// functions of (parameters, seed).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "bnprop/bayes_net.hpp"
#include "bnprop/errors.hpp"
#include "bnprop/rng.hpp"

namespace bnprop {

inline constexpr double kProofRegimeEps = 0.3;

// Uniformity "no" instance: each mean independently 1/2 +- eps/sqrt(n).
struct ProductFamilyInstance {
    ProductSpec spec;
    bool outside_proof_regime = false;
};

inline ProductFamilyInstance gen_product_uniformity_no(int n, double eps, std::uint64_t seed) {
    if (n < 1 || eps < 0.0) throw InvalidParameter("need n >= 1 and eps >= 0");
    Rng rng(mix_seed(seed, 0x756e6966));
    ProductFamilyInstance out;
    out.outside_proof_regime = eps > kProofRegimeEps;
    const double shift = eps / std::sqrt(static_cast<double>(n));
    out.spec.means.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
        out.spec.means.push_back(rng.bernoulli(0.5) ? 0.5 - shift : 0.5 + shift);
    return out;
}

// Identity "no" family against the very biased null Bern(1/n)^n: the null
// P* has all means 1/n, the perturbed draw has means (1 +- eps)/n.
struct UnbalancedIdentityPair {
    ProductSpec null_spec;      // all means 1/n
    ProductSpec perturbed_spec; // means (1 +- eps)/n
    bool outside_proof_regime = false;
};

inline UnbalancedIdentityPair gen_unbalanced_identity_pair(int n, double eps, std::uint64_t seed) {
    if (n < 1 || eps < 0.0 || eps > 1.0) throw InvalidParameter("need n >= 1 and eps in [0,1]");
    Rng rng(mix_seed(seed, 0x756e62616cULL));
    UnbalancedIdentityPair out;
    out.outside_proof_regime = eps > kProofRegimeEps;
    const double base = 1.0 / static_cast<double>(n);
    out.null_spec.means.assign(static_cast<std::size_t>(n), base);
    out.perturbed_spec.means.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
        out.perturbed_spec.means.push_back(rng.bernoulli(0.5) ? base * (1.0 - eps)
                                                              : base * (1.0 + eps));
    return out;
}

// Closeness lower-bound family: each coordinate is heavy (p = q = 1/k) with
// probability 1/2, otherwise light; light coordinates agree (1/n each) in the
// "yes" family and carry opposite (1 +- eps)/n biases in the "no" family.
struct ClosenessPair {
    ProductSpec p, q;
    bool outside_proof_regime = false;
};

inline ClosenessPair gen_closeness_pair(int n, int k, double eps, std::uint64_t seed, bool far) {
    if (n < 1 || k < 1) throw InvalidParameter("need n >= 1 and k >= 1");
    if (eps < 0.0 || eps > 1.0) throw InvalidParameter("eps must lie in [0,1]");
    Rng rng(mix_seed(seed, 0x636c6f7365ULL));
    ClosenessPair out;
    out.outside_proof_regime = eps > kProofRegimeEps;
    const double heavy = 1.0 / static_cast<double>(k);
    const double light = 1.0 / static_cast<double>(n);
    out.p.means.reserve(static_cast<std::size_t>(n));
    out.q.means.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        if (rng.bernoulli(0.5)) {
            out.p.means.push_back(heavy);
            out.q.means.push_back(heavy);
        } else if (!far) {
            out.p.means.push_back(light);
            out.q.means.push_back(light);
        } else if (rng.bernoulli(0.5)) {
            out.p.means.push_back(light * (1.0 + eps));
            out.q.means.push_back(light * (1.0 - eps));
        } else {
            out.p.means.push_back(light * (1.0 - eps));
            out.q.means.push_back(light * (1.0 + eps));
        }
    }
    return out;
}

// ---- matching-orientation tree family ----------------------------------------

struct MatchingOrientation {
    std::vector<std::pair<int, int>> pairs; // n/2 disjoint (i, j), i < j
    std::vector<bool> orientations;          // one sign bit per pair
};

struct TreeMatchingInstance {
    BayesNet net;
    MatchingOrientation matching;
    double delta = 0.0; // eps / sqrt(n)
};

// Joint equals U(x) (1+2 delta)^agree (1-2 delta)^(n/2-agree), where a pair
// agrees when (-1)^(x_i + x_j) matches its orientation sign. Realized as a
// pair forest: each pair's lower index is a fair root and the higher index
// flips its conditional mean by +-delta.
inline TreeMatchingInstance gen_tree_matching_net(int n, double eps, std::uint64_t seed) {
    if (n < 2 || n % 2 != 0) throw InvalidParameter("matching family needs even n >= 2");
    if (!(eps >= 0.0 && eps <= std::sqrt(static_cast<double>(n)) / 2.0))
        throw InvalidParameter("need eps <= sqrt(n)/2 so probabilities stay in [0,1]");
    Rng rng(mix_seed(seed, 0x6d617463ULL));

    std::vector<int> perm(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), 0);
    for (int i = n - 1; i > 0; --i)
        std::swap(perm[static_cast<std::size_t>(i)],
                  perm[static_cast<std::size_t>(rng.next_below(static_cast<std::uint64_t>(i) + 1))]);

    TreeMatchingInstance out;
    out.delta = eps / std::sqrt(static_cast<double>(n));
    std::vector<std::vector<int>> parents(static_cast<std::size_t>(n));
    std::vector<std::vector<double>> cpt(static_cast<std::size_t>(n), std::vector<double>{0.5});
    std::vector<std::pair<std::pair<int, int>, bool>> tagged;
    for (int p = 0; p < n / 2; ++p) {
        int a = perm[static_cast<std::size_t>(2 * p)], b = perm[static_cast<std::size_t>(2 * p + 1)];
        if (a > b) std::swap(a, b);
        const bool flip = rng.bernoulli(0.5);
        tagged.push_back({{a, b}, flip});
        const double sign = flip ? -1.0 : 1.0;
        parents[static_cast<std::size_t>(b)] = {a};
        cpt[static_cast<std::size_t>(b)] = {0.5 - sign * out.delta, 0.5 + sign * out.delta};
    }
    std::sort(tagged.begin(), tagged.end());
    for (const auto& [pair, flip] : tagged) {
        out.matching.pairs.push_back(pair);
        out.matching.orientations.push_back(flip);
    }
    out.net = BayesNet(validate_structure(parents), std::move(cpt));
    return out;
}

// Closed-form joint probability of the matching family at state x.
inline double tree_matching_state_prob(const MatchingOrientation& mo, double delta, int n,
                                       std::uint64_t x) {
    int agree = 0;
    for (std::size_t p = 0; p < mo.pairs.size(); ++p) {
        const auto [i, j] = mo.pairs[p];
        const int parity = static_cast<int>(((x >> i) & 1u) ^ ((x >> j) & 1u));
        const int want = mo.orientations[p] ? 1 : 0;
        if (parity == want) ++agree;
    }
    const double u = std::pow(0.5, n);
    return u * std::pow(1.0 + 2.0 * delta, agree) *
           std::pow(1.0 - 2.0 * delta, n / 2 - agree);
}

// L1 norm (= 2 d_TV) between Binomial(s, 1/2) and Binomial(s, 1/2 + delta);
// equals || P_matching - U ||_1 with s = n/2. Coefficients are built by the
// exact multiplicative recurrence, so small-s values carry no lgamma noise.
inline double binomial_l1_shift(int s, double delta) {
    if (s < 0 || s > 50) throw InvalidParameter("binomial helper supports s in [0, 50]");
    double coeff = 1.0;
    double l1 = 0.0;
    for (int k = 0; k <= s; ++k) {
        const double a = coeff * std::pow(0.5, s);
        const double b = coeff * std::pow(0.5 + delta, k) * std::pow(0.5 - delta, s - k);
        l1 += std::fabs(a - b);
        coeff = coeff * static_cast<double>(s - k) / static_cast<double>(k + 1);
    }
    return l1;
}

// ---- pointer mixture -----------------------------------------------------------

// d fair pointer bits select one of 2^d product distributions on the
// remaining coordinates: node d+t has all pointers as parents and conditional
// mean leaf_products[a].means[t] under pointer assignment a.
inline BayesNet gen_pointer_mixture(int d, const std::vector<ProductSpec>& leaf_products) {
    if (d < 0 || d > 20) throw InvalidParameter("pointer degree out of range");
    const std::size_t want = std::size_t{1} << d;
    if (leaf_products.size() != want)
        throw ArityMismatch("need exactly 2^d = " + std::to_string(want) + " leaf products, got " +
                            std::to_string(leaf_products.size()));
    const int tail = leaf_products.empty() ? 0 : leaf_products.front().n();
    for (const auto& leaf : leaf_products)
        if (leaf.n() != tail) throw ArityMismatch("leaf products have differing lengths");
    if (tail < 1) throw InvalidParameter("leaf products must be non-empty");

    const int n = d + tail;
    std::vector<std::vector<int>> parents(static_cast<std::size_t>(n));
    std::vector<std::vector<double>> cpt(static_cast<std::size_t>(n));
    for (int i = 0; i < d; ++i) cpt[static_cast<std::size_t>(i)] = {0.5};
    std::vector<int> pointer(static_cast<std::size_t>(d));
    std::iota(pointer.begin(), pointer.end(), 0);
    for (int t = 0; t < tail; ++t) {
        parents[static_cast<std::size_t>(d + t)] = pointer;
        auto& row = cpt[static_cast<std::size_t>(d + t)];
        row.resize(want);
        for (std::size_t a = 0; a < want; ++a)
            row[a] = leaf_products[a].means[static_cast<std::size_t>(t)];
    }
    return BayesNet(validate_structure(parents), std::move(cpt));
}

// ---- random balanced instances for property suites ------------------------------

// Random DAG with max in-degree <= d (already topologically numbered).
inline DagStructure gen_random_dag(int n, int d, std::uint64_t seed) {
    if (n < 1 || d < 0) throw InvalidParameter("need n >= 1, d >= 0");
    Rng rng(mix_seed(seed, 0x646167ULL));
    std::vector<std::vector<int>> parents(static_cast<std::size_t>(n));
    for (int i = 1; i < n; ++i) {
        const int maxdeg = std::min(i, d);
        const int deg = maxdeg == 0 ? 0 : static_cast<int>(rng.next_below(maxdeg + 1));
        std::vector<int> pool(static_cast<std::size_t>(i));
        std::iota(pool.begin(), pool.end(), 0);
        for (int t = 0; t < deg; ++t) {
            const auto pick = rng.next_below(pool.size() - static_cast<std::size_t>(t));
            std::swap(pool[pick], pool[pool.size() - 1 - static_cast<std::size_t>(t)]);
            parents[static_cast<std::size_t>(i)].push_back(
                pool[pool.size() - 1 - static_cast<std::size_t>(t)]);
        }
    }
    return validate_structure(parents);
}

// Random net on a random degree-d DAG with cpt entries uniform in [lo, hi].
inline BayesNet gen_random_net(int n, int d, double lo, double hi, std::uint64_t seed) {
    if (!(lo >= 0.0 && hi <= 1.0 && lo <= hi)) throw InvalidParameter("bad cpt range");
    DagStructure s = gen_random_dag(n, d, seed);
    Rng rng(mix_seed(seed, 0x637074ULL));
    std::vector<std::vector<double>> cpt(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        cpt[static_cast<std::size_t>(i)].resize(std::size_t{1} << s.parents[i].size());
        for (auto& e : cpt[static_cast<std::size_t>(i)]) e = lo + (hi - lo) * rng.next_double();
    }
    return BayesNet(std::move(s), std::move(cpt));
}

// Random cpt on a fixed structure.
inline BayesNet gen_random_net_on(const DagStructure& s, double lo, double hi,
                                  std::uint64_t seed) {
    Rng rng(mix_seed(seed, 0x6374ULL));
    std::vector<std::vector<double>> cpt(static_cast<std::size_t>(s.n));
    for (int i = 0; i < s.n; ++i) {
        cpt[static_cast<std::size_t>(i)].resize(std::size_t{1} << s.parents[i].size());
        for (auto& e : cpt[static_cast<std::size_t>(i)]) e = lo + (hi - lo) * rng.next_double();
    }
    return BayesNet(s, std::move(cpt));
}

// Random connected c-balanced tree whose every edge has conditional-mean gap
// at least gamma_min (tree-sense non-degeneracy).
inline BayesNet gen_balanced_tree_net(int n, double c, double gamma_min, std::uint64_t seed) {
    if (n < 2) throw InvalidParameter("tree needs n >= 2");
    if (!(c > 0.0 && c < 0.5)) throw InvalidParameter("c must lie in (0, 1/2)");
    if (!(gamma_min > 0.0 && gamma_min <= 1.0 - 2.0 * c))
        throw InvalidParameter("gamma_min must lie in (0, 1-2c]");
    Rng rng(mix_seed(seed, 0x74726565ULL));
    std::vector<std::vector<int>> parents(static_cast<std::size_t>(n));
    std::vector<std::vector<double>> cpt(static_cast<std::size_t>(n));
    cpt[0] = {c + (1.0 - 2.0 * c) * rng.next_double()};
    for (int i = 1; i < n; ++i) {
        parents[static_cast<std::size_t>(i)] = {static_cast<int>(rng.next_below(i))};
        const double gap = gamma_min + (1.0 - 2.0 * c - gamma_min) * rng.next_double();
        const double lo_mean = c + (1.0 - 2.0 * c - gap) * rng.next_double();
        const bool up = rng.bernoulli(0.5);
        const double p0 = up ? lo_mean : lo_mean + gap;
        const double p1 = up ? lo_mean + gap : lo_mean;
        cpt[static_cast<std::size_t>(i)] = {p0, p1};
    }
    return BayesNet(validate_structure(parents), std::move(cpt));
}

} // namespace bnprop
