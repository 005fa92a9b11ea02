#include <catch2/catch.hpp>

#include <cmath>
#include <sstream>

#include "bnprop/exact.hpp"
#include "bnprop/hard_instances.hpp"
#include "bnprop/sampling.hpp"

using namespace bnprop;

TEST_CASE("empty batch and deterministic nets") {
    const auto net = ProductSpec{{0.0, 1.0}}.to_bayes_net();
    const auto empty = sample(net, 0, 7);
    REQUIRE(empty.size() == 0);

    const auto batch = sample(net, 100, 7);
    for (std::uint64_t r = 0; r < batch.size(); ++r) REQUIRE(batch.row(r) == 0b10);
}

TEST_CASE("sampling is deterministic given the seed") {
    const BayesNet net(validate_structure({{}, {0}}), {{0.5}, {0.1, 0.9}});
    const auto a = sample(net, 500, 42);
    const auto b = sample(net, 500, 42);
    for (std::uint64_t r = 0; r < a.size(); ++r) REQUIRE(a.row(r) == b.row(r));
    const auto c = sample(net, 500, 43);
    bool differs = false;
    for (std::uint64_t r = 0; r < c.size(); ++r) differs |= (a.row(r) != c.row(r));
    REQUIRE(differs);
}

TEST_CASE("chain sampler matches the exact joint at Monte-Carlo accuracy") {
    const BayesNet net(validate_structure({{}, {0}}), {{0.5}, {0.1, 0.9}});
    const std::uint64_t m = 1000000;
    const auto batch = sample(net, m, 2024);
    std::uint64_t count11 = 0;
    for (std::uint64_t r = 0; r < m; ++r)
        if (batch.row(r) == 0b11) ++count11;
    const double freq = static_cast<double>(count11) / static_cast<double>(m);
    const double half = 3.0 * std::sqrt(0.45 * 0.55 / static_cast<double>(m));
    REQUIRE(std::fabs(freq - 0.45) <= half);
}

TEST_CASE("count queries equal direct recounts") {
    const auto net = ProductSpec{{0.2, 0.7, 0.5}}.to_bayes_net();
    const auto batch = sample(net, 2000, 5);
    for (int i = 0; i < 3; ++i) {
        std::uint64_t direct = 0;
        for (std::uint64_t r = 0; r < batch.size(); ++r) direct += batch.bit(r, i);
        REQUIRE(batch.count_ones(i) == direct);
    }
    // Histogram agrees with rows.
    REQUIRE(batch.has_histogram());
    std::uint64_t total = 0;
    for (auto c : batch.histogram()) total += c;
    REQUIRE(total == batch.size());
}

TEST_CASE("batch file round-trip is bit exact") {
    const auto net = ProductSpec{{0.3, 0.6}}.to_bayes_net();
    const auto batch = sample(net, 50, 99);
    std::stringstream ss;
    batch.write(ss);
    const auto back = SampleBatch::read(ss);
    REQUIRE(back.size() == batch.size());
    REQUIRE(back.n() == batch.n());
    REQUIRE(back.seed() == batch.seed());
    for (std::uint64_t r = 0; r < batch.size(); ++r) REQUIRE(back.row(r) == batch.row(r));
}

TEST_CASE("batch source exhausts") {
    const auto net = ProductSpec{{0.5}}.to_bayes_net();
    const auto batch = sample(net, 3, 1);
    BatchSource src(batch);
    src.next();
    src.next();
    src.next();
    REQUIRE_THROWS_AS(src.next(), SampleSourceExhausted);
}

TEST_CASE("sampler goodness of fit at n = 6") {
    const auto net = gen_random_net_on(validate_structure({{}, {0}, {1}, {0}, {3}, {2}}),
                                       0.2, 0.8, 314);
    const std::uint64_t m = 1000000;
    const auto batch = sample(net, m, 2718);
    const auto joint = exact_joint(net);
    double chi2 = 0.0;
    for (std::uint64_t x = 0; x < joint.size(); ++x) {
        const double expected = joint[x] * static_cast<double>(m);
        const double diff = static_cast<double>(batch.histogram()[x]) - expected;
        chi2 += diff * diff / expected;
    }
    // chi-square critical value, 63 dof, significance 1e-3.
    REQUIRE(chi2 <= 103.5);
}

TEST_CASE("poisson sampler moments across regimes") {
    Rng rng(17);
    for (double lambda : {0.5, 5.0, 25.0, 80.0, 3000.0}) {
        const int trials = 20000;
        double sum = 0.0, sumsq = 0.0;
        for (int t = 0; t < trials; ++t) {
            const double v = static_cast<double>(rng.poisson(lambda));
            sum += v;
            sumsq += v * v;
        }
        const double mean = sum / trials;
        const double var = sumsq / trials - mean * mean;
        const double se = std::sqrt(lambda / trials);
        REQUIRE(std::fabs(mean - lambda) <= 5.0 * se);
        REQUIRE(var == Approx(lambda).epsilon(0.1));
    }
}

TEST_CASE("permuted source relabels coordinates") {
    const auto net = ProductSpec{{1.0, 0.0, 1.0}}.to_bayes_net();
    BayesNetSource raw(net, 3);
    PermutedSource perm(raw, {2, 0, 1});
    // Output bit r = input bit ordering[r]: (1,1,0).
    REQUIRE(perm.next() == 0b011);
}
