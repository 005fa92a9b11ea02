// bn-core oracles: exact joints, configuration probabilities, distances,
// balancedness, conditional covariance, and the independence surgery.

#include <catch2/catch.hpp>

#include <cmath>

#include "bnprop/exact.hpp"
#include "bnprop/hard_instances.hpp"

using namespace bnprop;

namespace {

// Chain X1 -> X2 with p1 = 0.5, p(2|0) = 0.1, p(2|1) = 0.9.
BayesNet chain2() {
    return BayesNet(validate_structure({{}, {0}}), {{0.5}, {0.1, 0.9}});
}

BayesNet coin(double p) { return ProductSpec{{p}}.to_bayes_net(); }

} // namespace

TEST_CASE("exact joint of independent fair coins is uniform") {
    const auto net = ProductSpec{{0.5, 0.5}}.to_bayes_net();
    const auto joint = exact_joint(net);
    for (double v : joint) REQUIRE(v == Approx(0.25).margin(1e-15));
}

TEST_CASE("exact joint of the two-node chain") {
    const auto joint = exact_joint(chain2());
    REQUIRE(joint[0b00] == Approx(0.45).margin(1e-12)); // 0.5 * 0.9
    REQUIRE(joint[0b10] == Approx(0.05).margin(1e-12)); // x2 = 1 given x1 = 0
    REQUIRE(joint[0b01] == Approx(0.05).margin(1e-12)); // x1 = 1, x2 = 0
    REQUIRE(joint[0b11] == Approx(0.45).margin(1e-12));
}

TEST_CASE("exact joints normalize") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto net = gen_random_net(6, 2, 0.0, 1.0, seed);
        const auto joint = exact_joint(net);
        double s = 0.0;
        for (double v : joint) s += v;
        REQUIRE(s == Approx(1.0).margin(1e-12));
    }
}

TEST_CASE("enumeration cap guards exact_joint") {
    std::vector<std::vector<int>> parents(30);
    std::vector<std::vector<double>> cpt(30, std::vector<double>{0.5});
    const BayesNet big(validate_structure(parents), std::move(cpt));
    REQUIRE_THROWS_AS(exact_joint(big), EnumerationCapExceeded);
}

TEST_CASE("parental configuration probabilities") {
    const auto net = chain2();
    REQUIRE(parent_config_prob(net, {0, 0}).value == Approx(1.0)); // root: empty config
    REQUIRE(parent_config_prob(net, {1, 1}).value == Approx(0.5).margin(1e-12));

    const BayesNet v(validate_structure({{}, {}, {0, 1}}),
                     {{0.5}, {0.5}, {0.1, 0.2, 0.3, 0.4}});
    REQUIRE(parent_config_prob(v, {2, 0b11}).value == Approx(0.25).margin(1e-12));
}

TEST_CASE("l1_exact basics") {
    REQUIRE(l1_exact(chain2(), chain2()) == Approx(0.0).margin(1e-15));
    // Point masses on distinct strings are at L1 distance 2.
    const auto a = ProductSpec{{1.0, 0.0}}.to_bayes_net();
    const auto b = ProductSpec{{0.0, 1.0}}.to_bayes_net();
    REQUIRE(l1_exact(a, b) == Approx(2.0).margin(1e-15));
    REQUIRE(l1_exact(coin(0.6), coin(0.5)) == Approx(0.2).margin(1e-12));
}

TEST_CASE("kl_same_structure matches the Bernoulli formula") {
    REQUIRE(kl_same_structure(chain2(), chain2()) == Approx(0.0).margin(1e-15));
    const double expected = 0.75 * std::log(1.5) + 0.25 * std::log(0.5);
    REQUIRE(kl_same_structure(coin(0.75), coin(0.5)) == Approx(expected).margin(1e-12));
    REQUIRE(expected == Approx(0.13081).margin(1e-5));
}

TEST_CASE("kl_same_structure agrees with brute force over the joint") {
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
        const auto s = gen_random_dag(5, 2, seed);
        const auto p = gen_random_net_on(s, 0.05, 0.95, seed * 2 + 1);
        const auto q = gen_random_net_on(s, 0.05, 0.95, seed * 2 + 2);
        const auto jp = exact_joint(p), jq = exact_joint(q);
        double direct = 0.0;
        for (std::size_t x = 0; x < jp.size(); ++x)
            if (jp[x] > 0.0) direct += jp[x] * std::log(jp[x] / jq[x]);
        REQUIRE(kl_same_structure(p, q) == Approx(direct).margin(1e-9));
    }
}

TEST_CASE("kl errors") {
    const auto independent_pair = ProductSpec{{0.5, 0.5}}.to_bayes_net();
    REQUIRE_THROWS_AS(kl_same_structure(chain2(), independent_pair), StructureMismatch);
    REQUIRE_THROWS_AS(kl_same_structure(coin(0.5), coin(1.0)), BoundaryProbability);
}

TEST_CASE("chi2 identity proxy") {
    REQUIRE(chi2_identity_proxy(coin(0.5), coin(0.5)) == Approx(0.0).margin(1e-15));
    REQUIRE(chi2_identity_proxy(coin(0.6), coin(0.5)) == Approx(0.04).margin(1e-12));
}

TEST_CASE("hellinger bound formula value") {
    REQUIRE(hellinger_bound_bn(coin(0.5), coin(0.5)) == Approx(0.0).margin(1e-15));
    // 2 * 0.01 / (1.1 * 0.9)
    REQUIRE(hellinger_bound_bn(coin(0.6), coin(0.5)) == Approx(0.0202020202).margin(1e-9));
}

TEST_CASE("balancedness report") {
    const auto all_half = ProductSpec{{0.5, 0.5}}.to_bayes_net();
    auto rep = balancedness(all_half);
    REQUIRE(rep.c == Approx(0.5));
    REQUIRE(rep.C == Approx(1.0));

    rep = balancedness(chain2());
    REQUIRE(rep.c == Approx(0.1));
    REQUIRE(rep.C == Approx(0.5).margin(1e-12));

    const auto det = ProductSpec{{1.0, 0.5}}.to_bayes_net();
    REQUIRE(balancedness(det).c == Approx(0.0));
}

TEST_CASE("conditional covariance on a noisy xor") {
    // X3 = X1 xor X2 flipped with probability 0.1.
    const BayesNet net(validate_structure({{}, {}, {0, 1}}),
                       {{0.5}, {0.5}, {0.1, 0.9, 0.9, 0.1}});
    const auto joint = exact_joint(net);

    // Conditioned on X3, the roots are dependent: hand-computed covariance.
    const auto cc = conditional_covariance_exact(joint, 3, 0, 1, {2});
    // Pr[X3=1] = 0.5 by symmetry; Pr[X1=1,X2=1 | X3=1] = 0.25*0.1/0.5 = 0.05,
    // marginals 0.5 each => cov = 0.05 - 0.25 = -0.2; for X3=0 it is +0.2.
    REQUIRE(cc.mass[0] == Approx(0.5).margin(1e-12));
    REQUIRE(cc.cov[0] == Approx(0.2).margin(1e-12));
    REQUIRE(cc.cov[1] == Approx(-0.2).margin(1e-12));
    REQUIRE(cc.beta == Approx(0.2).margin(1e-12));

    // Unconditionally the roots are independent.
    const auto un = conditional_covariance_exact(joint, 3, 0, 1, {});
    REQUIRE(un.beta == Approx(0.0).margin(1e-12));
}

TEST_CASE("fully independent net has beta zero everywhere") {
    const auto net = ProductSpec{{0.3, 0.6, 0.8}}.to_bayes_net();
    const auto joint = exact_joint(net);
    for (int i = 0; i < 3; ++i)
        for (int j = i + 1; j < 3; ++j) {
            REQUIRE(conditional_covariance_exact(joint, 3, i, j, {}).beta ==
                    Approx(0.0).margin(1e-12));
            const int other = 3 - i - j;
            REQUIRE(conditional_covariance_exact(joint, 3, i, j, {other}).beta ==
                    Approx(0.0).margin(1e-12));
        }
}

TEST_CASE("surgery zeroes conditional covariances at L1 cost exactly 4 beta") {
    for (std::uint64_t seed = 0; seed < 25; ++seed) {
        const int n = 3 + static_cast<int>(seed % 2);
        const auto net = gen_random_net(n, 2, 0.1, 0.9, seed + 1000);
        const auto joint = exact_joint(net);
        const int i = 0, j = 1;
        std::vector<int> cond;
        for (int k = 2; k < n; ++k) cond.push_back(k);
        const auto cc = conditional_covariance_exact(joint, n, i, j, cond);
        const auto fixed = conditional_independence_surgery(joint, n, i, j, cond);

        double total = 0.0;
        for (double v : fixed) {
            REQUIRE(v >= -1e-12);
            total += v;
        }
        REQUIRE(total == Approx(1.0).margin(1e-12));
        REQUIRE(l1_between(joint, fixed) == Approx(4.0 * cc.beta).margin(1e-12));
        const auto after = conditional_covariance_exact(fixed, n, i, j, cond);
        REQUIRE(after.beta <= 1e-12);
    }
}

TEST_CASE("surgery with a proper subset conditioning set") {
    const auto net = gen_random_net(4, 2, 0.15, 0.85, 77);
    const auto joint = exact_joint(net);
    const auto cc = conditional_covariance_exact(joint, 4, 1, 3, {0});
    const auto fixed = conditional_independence_surgery(joint, 4, 1, 3, {0});
    REQUIRE(l1_between(joint, fixed) == Approx(4.0 * cc.beta).margin(1e-12));
    REQUIRE(conditional_covariance_exact(fixed, 4, 1, 3, {0}).beta <= 1e-12);
}

TEST_CASE("nondegeneracy audit brackets and floors") {
    // Fork with strong edges: all matching triples carry real dependence.
    const BayesNet fork(validate_structure({{}, {0}, {0}}),
                        {{0.5}, {0.1, 0.9}, {0.1, 0.9}});
    const auto audit = nondegeneracy_interval(fork, 1);
    REQUIRE_FALSE(audit.triples.empty());
    for (const auto& t : audit.triples) {
        REQUIRE(t.lo == Approx(t.beta / 3.0));
        REQUIRE(t.hi == Approx(2.0 * t.beta));
        REQUIRE(t.beta > 0.01);
    }
    REQUIRE(audit.gamma_lower > 0.0);

    const auto indep = ProductSpec{{0.5, 0.5, 0.5}}.to_bayes_net();
    REQUIRE(nondegeneracy_interval(indep, 1).triples.empty());
}

TEST_CASE("distance to conditional independence is bracketed by [beta/3, 2beta]") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const int n = 3;
        const auto net = gen_random_net(n, 2, 0.1, 0.9, seed + 50);
        const auto joint = exact_joint(net);
        const auto cc = conditional_covariance_exact(joint, n, 0, 1, {2});
        const double dist = distance_to_conditional_independence(joint, n, 0, 1, {2});
        REQUIRE(dist <= 2.0 * cc.beta + 1e-9);
        REQUIRE(dist >= cc.beta / 3.0 - 1e-9);
    }
}

TEST_CASE("beyond the cap, configuration probabilities fall back to Monte-Carlo") {
    // 26-node chain: enumeration is off the table, so the estimate comes with
    // a reported half-width that should cover the analytic value.
    std::vector<std::vector<int>> parents(26);
    std::vector<std::vector<double>> cpt(26, std::vector<double>{0.3, 0.8});
    for (int i = 1; i < 26; ++i) parents[i] = {i - 1};
    cpt[0] = {0.6};
    const BayesNet chain(validate_structure(parents), std::move(cpt));

    REQUIRE_THROWS_AS(exact_joint(chain), EnumerationCapExceeded);

    // Pr[X1 = 1] = 0.6 exactly; the chain's stationary-ish mixing keeps later
    // marginals near 0.6 as well, but only the root is asserted analytically.
    const auto root_child = parent_config_prob(chain, {1, 1});
    REQUIRE(root_child.half_width > 0.0);
    REQUIRE(std::fabs(root_child.value - 0.6) <= 2.0 * root_child.half_width);

    const auto rep = balancedness(chain);
    REQUIRE(rep.c == Approx(0.2));
    REQUIRE(rep.C > 0.3); // every parent marginal stays well inside (0.35, 0.65)
    REQUIRE(rep.C < 0.5);
}
