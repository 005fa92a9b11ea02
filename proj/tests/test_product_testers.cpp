#include <catch2/catch.hpp>

#include <cmath>

#include "bnprop/exact.hpp"
#include "bnprop/hard_instances.hpp"
#include "bnprop/product_testers.hpp"

using namespace bnprop;

TEST_CASE("flip_normalize") {
    auto fn = flip_normalize(ProductSpec{{0.5, 0.5}});
    REQUIRE(fn.flip_mask == 0);
    REQUIRE(fn.q.means == std::vector<double>{0.5, 0.5});

    fn = flip_normalize(ProductSpec{{0.9, 0.3}});
    REQUIRE(fn.flip_mask == 0b01);
    REQUIRE(fn.q.means[0] == Approx(0.1));
    REQUIRE(fn.q.means[1] == Approx(0.3));

    // Involution: flipping the already-flipped spec changes nothing more.
    const auto fn2 = flip_normalize(fn.q);
    REQUIRE(fn2.flip_mask == 0);
    REQUIRE(fn2.q.means == fn.q.means);
}

TEST_CASE("flipped source applies the mask") {
    ProductSource raw(ProductSpec{{1.0, 0.0}}, 1);
    FlippedSource flipped(raw, 0b01);
    REQUIRE(flipped.next() == 0b00);
}

TEST_CASE("balance transform gamma and means") {
    // Constant-zero source, n = 1, eps = 1.6: gamma_0 = 0.1, mean becomes 0.1.
    ProductSource zeros(ProductSpec{{0.0}}, 5);
    BalanceTransformSource transformed(zeros, 1.6, 11);
    REQUIRE(transformed.gamma0() == Approx(0.1));
    std::uint64_t ones = 0;
    const int m = 200000;
    for (int t = 0; t < m; ++t) ones += transformed.next() & 1u;
    REQUIRE(static_cast<double>(ones) / m == Approx(0.1).margin(0.005));

    const auto means = balance_transform_means({0.0, 1.0, 0.4}, 1.6);
    const double g = 1.6 / 48.0;
    REQUIRE(means[0] == Approx(g));
    REQUIRE(means[1] == Approx(1.0 - g));
    REQUIRE(means[2] == Approx((1.0 - 2.0 * g) * 0.4 + g));
}

TEST_CASE("identity sample size formula") {
    REQUIRE(product_identity_sample_size(100, 0.5) == 108640);
}

TEST_CASE("identity statistic on fabricated counts") {
    const std::vector<double> q{0.2, 0.4};
    const double m = 1000.0;
    // W_i = m q_i exactly: each term contributes -m q_i / (q_i (1-q_i)).
    const double w = product_identity_statistic(q, {200.0, 400.0}, m);
    const double expected = -(m * 0.2) / (0.2 * 0.8) - (m * 0.4) / (0.4 * 0.6);
    REQUIRE(w == Approx(expected).margin(1e-9));
    REQUIRE(w < 0.25 * m * m); // below any threshold, so such a run accepts
}

TEST_CASE("identity tester accepts the null and rejects a far instance") {
    const int n = 20;
    const double eps = 0.45;
    ProductSpec uniform;
    uniform.means.assign(n, 0.5);
    int null_accepts = 0, far_rejects = 0;
    const int trials = 12;
    for (int t = 0; t < trials; ++t) {
        ProductSource null_src(uniform, mix_seed(900 + t, 1));
        ProductIdentityOptions opts;
        opts.seed = mix_seed(900 + t, 2);
        null_accepts += product_identity_test(uniform, null_src, eps, opts).accepted();

        const auto far = gen_product_uniformity_no(n, eps, 77).spec;
        ProductSource far_src(far, mix_seed(900 + t, 3));
        opts.seed = mix_seed(900 + t, 4);
        far_rejects += !product_identity_test(uniform, far_src, eps, opts).accepted();
    }
    REQUIRE(null_accepts == trials);
    REQUIRE(far_rejects == trials);
}

TEST_CASE("identity tester forced reject on a Poisson overflow") {
    // With the constant pushed down to m = 1, max_i Poisson(1) over 30
    // coordinates exceeds 2m within a few seeds.
    ProductSpec q;
    q.means.assign(30, 0.5);
    bool saw_forced = false;
    for (std::uint64_t seed = 0; seed < 50 && !saw_forced; ++seed) {
        ProductSource src(q, seed);
        ProductIdentityOptions opts;
        opts.constant = 1e-9; // m = 1
        opts.seed = seed;
        const Verdict v = product_identity_test(q, src, 0.5, opts);
        if (v.trigger == "poisson-overflow") {
            saw_forced = true;
            REQUIRE(v.decision == Decision::Reject);
            REQUIRE(v.statistic == v.threshold);
            REQUIRE(v.samples_used == 0);
        }
    }
    REQUIRE(saw_forced);
}

TEST_CASE("identity tester validates inputs") {
    ProductSpec q{{0.7}};
    ProductSource src(q, 1);
    REQUIRE_THROWS_AS(product_identity_test(q, src, 0.3), InvalidParameter); // q > 1/2
    ProductSpec ok{{0.5}};
    REQUIRE_THROWS_AS(product_identity_test(ok, src, 1.5), InvalidParameter);
}

TEST_CASE("closeness heavy summand values") {
    REQUIRE(closeness_heavy_term(4.0, 0.0) == Approx(3.0));
    REQUIRE(closeness_heavy_term(7.0, 7.0) == Approx(-1.0));
    REQUIRE(closeness_heavy_term(0.0, 0.0) == 0.0);
}

TEST_CASE("closeness accepts identical all-zero sources with zero statistics") {
    ProductSpec zeros;
    zeros.means.assign(8, 0.0);
    ProductSource sp(zeros, 1), sq(zeros, 2);
    ProductClosenessOptions opts;
    opts.constant = 100.0;
    opts.seed = 3;
    const Verdict v = product_closeness_test(sp, sq, 0.4, 8, opts);
    REQUIRE(v.accepted());
    REQUIRE(v.statistic == 0.0);
    REQUIRE(v.trigger.empty());
}

TEST_CASE("closeness rejects during preprocessing on a mean discrepancy") {
    ProductSource sp(ProductSpec{{0.9, 0.5}}, 1), sq(ProductSpec{{0.1, 0.5}}, 2);
    const Verdict v = product_closeness_test(sp, sq, 0.3, 2);
    REQUIRE(v.decision == Decision::Reject);
    REQUIRE(v.trigger == "mean-discrepancy");
    REQUIRE(v.stage == "preprocess");
}

TEST_CASE("closeness contract smoke test") {
    const int n = 20;
    const double eps = 0.3;
    int null_accepts = 0, far_rejects = 0;
    const int trials = 6;
    for (int t = 0; t < trials; ++t) {
        const auto same = gen_closeness_pair(n, 4, eps, 5, false);
        ProductSource sp(same.p, mix_seed(100 + t, 1)), sq(same.q, mix_seed(100 + t, 2));
        ProductClosenessOptions opts;
        opts.seed = mix_seed(100 + t, 3);
        null_accepts += product_closeness_test(sp, sq, eps, n, opts).accepted();

        const auto far = gen_closeness_pair(n, 4, eps, 5, true);
        ProductSource fp(far.p, mix_seed(100 + t, 4)), fq(far.q, mix_seed(100 + t, 5));
        opts.seed = mix_seed(100 + t, 6);
        far_rejects += !product_closeness_test(fp, fq, eps, n, opts).accepted();
    }
    REQUIRE(null_accepts >= trials - 1);
    REQUIRE(far_rejects >= trials - 1);
}

TEST_CASE("verdicts are bit-identical across reruns with the same seeds") {
    ProductSpec uniform;
    uniform.means.assign(10, 0.5);
    auto run = [&] {
        ProductSource src(uniform, 424242);
        ProductIdentityOptions opts;
        opts.seed = 727272;
        return product_identity_test(uniform, src, 0.4, opts);
    };
    const Verdict a = run(), b = run();
    REQUIRE(a.decision == b.decision);
    REQUIRE(a.statistic == b.statistic);
    REQUIRE(a.threshold == b.threshold);
    REQUIRE(a.samples_used == b.samples_used);
}

TEST_CASE("identity statistic is unbiased for the scaled chi-square distance") {
    // Small Monte-Carlo version of the unbiasedness lemma.
    const int n = 10;
    ProductSpec q, p;
    Rng init(7);
    for (int i = 0; i < n; ++i) {
        q.means.push_back(0.1 + 0.4 * init.next_double());
        p.means.push_back(0.1 + 0.4 * init.next_double());
    }
    const double m = 600.0;
    double target = 0.0;
    for (int i = 0; i < n; ++i) {
        const double d = p.means[i] - q.means[i];
        target += d * d / (q.means[i] * (1.0 - q.means[i]));
    }
    target *= m * m;

    const int trials = 600;
    double sum = 0.0, sumsq = 0.0;
    for (int t = 0; t < trials; ++t) {
        Rng rng(mix_seed(5000, t));
        ProductSource src(p, mix_seed(6000, t));
        std::vector<std::uint64_t> budgets(n);
        std::uint64_t maxb = 0;
        for (auto& b : budgets) {
            b = static_cast<std::uint64_t>(rng.poisson(m));
            maxb = std::max(maxb, b);
        }
        std::vector<double> ones(n, 0.0);
        for (std::uint64_t r = 0; r < maxb; ++r) {
            const std::uint64_t row = src.next();
            for (int i = 0; i < n; ++i)
                if (r < budgets[i]) ones[i] += (row >> i) & 1u;
        }
        const double w = product_identity_statistic(q.means, ones, m);
        sum += w;
        sumsq += w * w;
    }
    const double mean = sum / trials;
    const double sd = std::sqrt(sumsq / trials - mean * mean);
    const double se = sd / std::sqrt(static_cast<double>(trials));
    REQUIRE(std::fabs(mean - target) <= 5.0 * se);
}

TEST_CASE("tolerant map occupancy means") {
    const auto point = tolerant_map_fdelta({1.0}, 0.5);
    REQUIRE(point.means[0] == Approx(1.0 - std::exp(-0.5)).margin(1e-15));

    const int n = 6;
    std::vector<double> uniform(n, 1.0 / n);
    const auto mapped = tolerant_map_fdelta(uniform, 1.0);
    for (double v : mapped.means) REQUIRE(v == Approx(1.0 - std::exp(-1.0 / n)).margin(1e-15));

    REQUIRE_THROWS_AS(tolerant_map_fdelta({0.5, 0.2}, 0.5), InvalidParameter);
    REQUIRE_THROWS_AS(tolerant_map_fdelta(uniform, 0.0), InvalidParameter);
}

TEST_CASE("tolerant map contracts TV by roughly delta") {
    const int n = 6;
    const double delta = 0.1;
    Rng rng(99);
    for (int rep = 0; rep < 10; ++rep) {
        std::vector<double> p(n), q(n);
        double sp = 0.0, sq = 0.0;
        for (int i = 0; i < n; ++i) {
            p[i] = rng.next_double();
            q[i] = rng.next_double();
            sp += p[i];
            sq += q[i];
        }
        for (int i = 0; i < n; ++i) {
            p[i] /= sp;
            q[i] /= sq;
        }
        double tv = 0.0;
        for (int i = 0; i < n; ++i) tv += std::fabs(p[i] - q[i]);
        tv /= 2.0;
        if (tv < 1e-6) continue;
        const double mapped_tv = 0.5 * l1_exact(tolerant_map_fdelta(p, delta).to_bayes_net(),
                                                tolerant_map_fdelta(q, delta).to_bayes_net());
        const double ratio = mapped_tv / (delta * tv);
        REQUIRE(ratio >= 0.9);
        REQUIRE(ratio <= 1.1);
    }
}

TEST_CASE("identity statistic null variance stays under 8 m^2 n") {
    const int n = 20;
    const double m = 5000.0;
    ProductSpec q;
    Rng init(31);
    for (int i = 0; i < n; ++i) q.means.push_back(0.2 + 0.3 * init.next_double());

    const int trials = 800;
    double sum = 0.0, sumsq = 0.0;
    for (int t = 0; t < trials; ++t) {
        Rng rng(mix_seed(1234, t));
        ProductSource src(q, mix_seed(4321, t));
        std::vector<std::uint64_t> budgets(n);
        std::uint64_t maxb = 0;
        for (auto& b : budgets) {
            b = static_cast<std::uint64_t>(rng.poisson(m));
            maxb = std::max(maxb, b);
        }
        std::vector<double> ones(n, 0.0);
        for (std::uint64_t r = 0; r < maxb; ++r) {
            const std::uint64_t row = src.next();
            for (int i = 0; i < n; ++i)
                if (r < budgets[i]) ones[i] += (row >> i) & 1u;
        }
        const double w = product_identity_statistic(q.means, ones, m);
        sum += w;
        sumsq += w * w;
    }
    const double mean = sum / trials;
    const double var = sumsq / trials - mean * mean;
    REQUIRE(var <= 8.0 * m * m * n * 1.1);
}

TEST_CASE("closeness heavy statistic has mean zero under the null") {
    // Poissonized one-counts per coordinate with p = q.
    const int n = 15;
    const double m = 400.0;
    ProductSpec p;
    Rng init(77);
    for (int i = 0; i < n; ++i) p.means.push_back(0.05 + 0.5 * init.next_double());

    const int trials = 2000;
    double sum = 0.0, sumsq = 0.0;
    for (int t = 0; t < trials; ++t) {
        Rng rng(mix_seed(888, t));
        double w = 0.0;
        for (int i = 0; i < n; ++i) {
            const double lam = m * p.means[i];
            w += closeness_heavy_term(static_cast<double>(rng.poisson(lam)),
                                      static_cast<double>(rng.poisson(lam)));
        }
        sum += w;
        sumsq += w * w;
    }
    const double mean = sum / trials;
    const double se = std::sqrt((sumsq / trials - mean * mean) / trials);
    REQUIRE(std::fabs(mean) <= 4.0 * se);
}
