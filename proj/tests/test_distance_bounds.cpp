// Property suite for the distance inequalities: KL sandwich, Pinsker,
// Hellinger relations, the Bayes-net Hellinger bound, and the product lower
// bound. Random same-structure pairs, cpt entries in [0.05, 0.95].

#include <catch2/catch.hpp>

#include <cmath>

#include "bnprop/exact.hpp"
#include "bnprop/hard_instances.hpp"

using namespace bnprop;

namespace {

struct Pair {
    BayesNet p, q;
};

Pair random_pair(int n, int d, std::uint64_t seed) {
    const auto s = gen_random_dag(n, d, seed);
    return {gen_random_net_on(s, 0.05, 0.95, mix_seed(seed, 11)),
            gen_random_net_on(s, 0.05, 0.95, mix_seed(seed, 12))};
}

} // namespace

TEST_CASE("KL sandwich on random same-structure pairs") {
    for (std::uint64_t seed = 0; seed < 120; ++seed) {
        const auto [p, q] = random_pair(3 + static_cast<int>(seed % 4), 2, seed);
        const auto probs = all_parent_config_probs(p);
        double lower = 0.0;
        for (int i = 0; i < p.n(); ++i)
            for (int a = 0; a < p.config_count(i); ++a) {
                const double diff = p.entry(i, a) - q.entry(i, a);
                lower += probs[i][a] * diff * diff;
            }
        const double kl = kl_same_structure(p, q);
        const double proxy = chi2_identity_proxy(p, q, ConfigWeight::P);
        REQUIRE(2.0 * lower <= kl + 1e-9);
        REQUIRE(kl <= proxy + 1e-9);
    }
}

TEST_CASE("Pinsker on random same-structure pairs") {
    for (std::uint64_t seed = 0; seed < 120; ++seed) {
        const auto [p, q] = random_pair(3 + static_cast<int>(seed % 4), 2, seed + 1000);
        const double l1 = l1_exact(p, q);
        REQUIRE(l1 * l1 <= 2.0 * kl_same_structure(p, q) + 1e-9);
    }
}

TEST_CASE("Hellinger relations against brute force") {
    for (std::uint64_t seed = 0; seed < 120; ++seed) {
        const auto [p, q] = random_pair(3 + static_cast<int>(seed % 4), 2, seed + 2000);
        const auto jp = exact_joint(p), jq = exact_joint(q);
        const double h2 = hellinger2_between(jp, jq);
        const double h = std::sqrt(h2);
        const double l1 = l1_between(jp, jq);
        REQUIRE(h2 <= 0.5 * l1 + 1e-9);
        REQUIRE(0.5 * l1 <= std::sqrt(2.0) * h + 1e-9);
        REQUIRE(h2 <= hellinger_bound_bn(p, q) + 1e-9);
    }
}

TEST_CASE("product lower bound min(c, ||p-q||_2^4) <= L1^2") {
    const double c = 4.0 * (1.0 - std::exp(-1.5));
    for (std::uint64_t seed = 0; seed < 150; ++seed) {
        const int n = 2 + static_cast<int>(seed % 9);
        Rng rng(mix_seed(seed, 3000));
        ProductSpec ps, qs;
        for (int i = 0; i < n; ++i) {
            ps.means.push_back(0.05 + 0.9 * rng.next_double());
            qs.means.push_back(0.05 + 0.9 * rng.next_double());
        }
        double l2sq = 0.0;
        for (int i = 0; i < n; ++i) {
            const double d = ps.means[static_cast<std::size_t>(i)] - qs.means[static_cast<std::size_t>(i)];
            l2sq += d * d;
        }
        const double l1 = l1_exact(ps.to_bayes_net(), qs.to_bayes_net());
        REQUIRE(std::min(c, l2sq * l2sq) <= l1 * l1 + 1e-9);
    }
}
