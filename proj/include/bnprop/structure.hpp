#pragma once

// Structure machinery: the conditional-independence tester, the degree-d
// structure tester built on it, mutual information from first and second
// moments, Chow-Liu skeleton recovery, and the tree-structure check.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <numeric>
#include <string>
#include <vector>

#include "bnprop/bayes_net.hpp"
#include "bnprop/errors.hpp"
#include "bnprop/exact.hpp"
#include "bnprop/sampling.hpp"
#include "bnprop/verdict.hpp"

namespace bnprop {

// ---- moments ---------------------------------------------------------------

struct MomentTable {
    std::vector<double> mean;                // mu_i
    std::vector<std::vector<double>> cross;  // E[X_i X_j]; diagonal = mean
    double tau = 0.0;                        // additive accuracy, 0 when exact
};

inline MomentTable empirical_moments(const SampleBatch& batch, double tau = 0.0) {
    const int n = batch.n();
    MomentTable t;
    t.tau = tau;
    t.mean.assign(static_cast<std::size_t>(n), 0.0);
    t.cross.assign(static_cast<std::size_t>(n), std::vector<double>(static_cast<std::size_t>(n), 0.0));
    const double m = static_cast<double>(batch.size());
    if (m == 0.0) return t;
    if (batch.has_histogram()) {
        const auto& h = batch.histogram();
        for (std::uint64_t x = 0; x < h.size(); ++x) {
            if (h[x] == 0) continue;
            const double w = static_cast<double>(h[x]);
            for (int i = 0; i < n; ++i) {
                if (!((x >> i) & 1u)) continue;
                t.cross[i][i] += w;
                for (int j = i + 1; j < n; ++j)
                    if ((x >> j) & 1u) {
                        t.cross[i][j] += w;
                        t.cross[j][i] += w;
                    }
            }
        }
    } else {
        for (std::uint64_t r = 0; r < batch.size(); ++r) {
            const std::uint64_t x = batch.row(r);
            for (int i = 0; i < n; ++i) {
                if (!((x >> i) & 1u)) continue;
                t.cross[i][i] += 1.0;
                for (int j = i + 1; j < n; ++j)
                    if ((x >> j) & 1u) {
                        t.cross[i][j] += 1.0;
                        t.cross[j][i] += 1.0;
                    }
            }
        }
    }
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) t.cross[i][j] /= m;
        t.mean[static_cast<std::size_t>(i)] = t.cross[i][i];
    }
    return t;
}

inline MomentTable exact_moment_table(const BayesNet& net, int cap = kEnumerationCap) {
    const auto joint = exact_joint(net, cap);
    MomentTable t;
    t.cross = exact_cross_moments(joint, net.n());
    t.mean.resize(static_cast<std::size_t>(net.n()));
    for (int i = 0; i < net.n(); ++i) t.mean[static_cast<std::size_t>(i)] = t.cross[i][i];
    return t;
}

// ---- conditional covariance statistic ---------------------------------------

// beta_hat = sum over configurations a of S of
//   (empirical mass of a) * |empirical Cov(X_i, X_j | X_S = a)|,
// with empty configurations contributing zero.
inline double conditional_covariance_stat(const SampleBatch& batch, int i, int j,
                                          const std::vector<int>& cond) {
    if (i == j) throw InvalidParameter("conditional covariance needs i != j");
    for (int k : cond)
        if (k == i || k == j) throw InvalidParameter("conditioning set must avoid i and j");
    const int s = static_cast<int>(cond.size());
    const std::size_t nconf = std::size_t{1} << s;
    std::vector<double> mass(nconf, 0.0), e1(nconf, 0.0), e2(nconf, 0.0), e12(nconf, 0.0);
    auto accumulate = [&](std::uint64_t x, double w) {
        std::uint32_t a = 0;
        for (int k = 0; k < s; ++k) a |= static_cast<std::uint32_t>((x >> cond[k]) & 1u) << k;
        mass[a] += w;
        const bool bi = (x >> i) & 1u, bj = (x >> j) & 1u;
        if (bi) e1[a] += w;
        if (bj) e2[a] += w;
        if (bi && bj) e12[a] += w;
    };
    if (batch.has_histogram()) {
        const auto& h = batch.histogram();
        for (std::uint64_t x = 0; x < h.size(); ++x)
            if (h[x] != 0) accumulate(x, static_cast<double>(h[x]));
    } else {
        for (std::uint64_t r = 0; r < batch.size(); ++r) accumulate(batch.row(r), 1.0);
    }
    const double total = static_cast<double>(batch.size());
    if (total == 0.0) return 0.0;
    double beta = 0.0;
    for (std::size_t a = 0; a < nconf; ++a) {
        if (mass[a] <= 0.0) continue;
        const double cov = e12[a] / mass[a] - (e1[a] / mass[a]) * (e2[a] / mass[a]);
        beta += (mass[a] / total) * std::fabs(cov);
    }
    return beta;
}

// ---- conditional independence tester ----------------------------------------

struct CiOptions {
    double constant = 200.0; // multiplier on (2^|S| + ln(1/fail_prob)) / gamma^2
};

inline std::uint64_t ci_sample_count(int cond_size, double gamma, double fail_prob,
                                     double constant = 200.0) {
    const double need = constant *
                        (std::pow(2.0, cond_size) + std::log(1.0 / fail_prob)) / (gamma * gamma);
    return static_cast<std::uint64_t>(std::ceil(need));
}

// Accepts iff beta_hat <= gamma/3 (closed comparison); the stored threshold is
// one ulp above gamma/3 so that "Reject iff statistic >= threshold" still
// reads true at the boundary.
inline Verdict conditional_independence_test(SampleSource& source, int i, int j,
                                             const std::vector<int>& cond, double gamma,
                                             double fail_prob, const CiOptions& opts = {}) {
    if (!(gamma > 0.0 && gamma < 1.0)) throw InvalidParameter("gamma must lie in (0,1)");
    if (!(fail_prob > 0.0 && fail_prob < 1.0)) throw InvalidParameter("fail_prob must lie in (0,1)");
    const std::uint64_t m = ci_sample_count(static_cast<int>(cond.size()), gamma, fail_prob,
                                            opts.constant);
    SampleBatch batch = collect(source, m);
    const double beta = conditional_covariance_stat(batch, i, j, cond);
    const double bound = gamma / 3.0;
    return make_verdict(beta > bound, beta, std::nextafter(bound, std::numeric_limits<double>::infinity()),
                        m);
}

// ---- structure tester ---------------------------------------------------------

inline void check_triple_enumeration_cap(int n, int d) {
    double count = 1.0;
    for (int k = 0; k < d + 2; ++k) count *= static_cast<double>(n);
    if (count > 1e8)
        throw TripleEnumerationCapExceeded("n^(d+2) = " + std::to_string(count) + " exceeds 1e8");
}

// Number of (i, j, S) triples, |S| <= d over unordered pairs, that match
// dependence conditions (i)-(iv) under the structure.
inline std::uint64_t count_matching_triples(const DagStructure& s, int d) {
    std::uint64_t c = 0;
    for (int i = 0; i < s.n; ++i)
        for (int j = i + 1; j < s.n; ++j)
            for_each_subset_up_to(s.n, i, j, d, [&](const std::vector<int>& cond) {
                if (matches_dependence_condition(s, i, j, cond)) ++c;
            });
    return c;
}

struct StructureTestOptions {
    double ci_constant = 200.0;
    double overall_error = 0.01; // per-test failure prob is n^-(d+2) * overall_error
};

// Tests whether the source's distribution can carry the given structure: one
// shared batch, a conditional-independence test per condition-matching triple,
// reject as soon as one of them looks conditionally independent. The verdict
// statistic is gamma/3 - min beta_hat with threshold 0.
inline Verdict structure_test(const DagStructure& s, SampleSource& source, double gamma, int d,
                              const StructureTestOptions& opts = {}) {
    if (!(gamma > 0.0 && gamma < 1.0)) throw InvalidParameter("gamma must lie in (0,1)");
    if (d < 0 || d >= s.n) throw InvalidParameter("degree must lie in [0, n)");
    check_triple_enumeration_cap(s.n, d);

    const double per_test_fail = opts.overall_error * std::pow(static_cast<double>(s.n),
                                                               -static_cast<double>(d + 2));
    const std::uint64_t m = ci_sample_count(d, gamma, per_test_fail, opts.ci_constant);
    SampleBatch batch = collect(source, m);

    const double bound = gamma / 3.0;
    double min_beta = std::numeric_limits<double>::infinity();
    std::string offender;
    for (int i = 0; i < s.n && offender.empty(); ++i)
        for (int j = i + 1; j < s.n && offender.empty(); ++j)
            for_each_subset_up_to(s.n, i, j, d, [&](const std::vector<int>& cond) {
                if (!offender.empty()) return;
                if (!matches_dependence_condition(s, i, j, cond)) return;
                const double beta = conditional_covariance_stat(batch, i, j, cond);
                min_beta = std::min(min_beta, beta);
                if (beta <= bound) {
                    offender = "ci-accept i=" + std::to_string(i) + " j=" + std::to_string(j) +
                               " |S|=" + std::to_string(cond.size());
                }
            });
    if (min_beta == std::numeric_limits<double>::infinity()) min_beta = bound + 1.0; // no triples
    Verdict v = make_verdict(!offender.empty(), bound - min_beta, 0.0, m, "structure");
    v.trigger = offender;
    return v;
}

// ---- mutual information from moments ----------------------------------------

// Direct MI (bits) of the 2x2 joint given by cell probabilities.
inline double mutual_information_2x2(double p00, double p01, double p10, double p11) {
    const double px1 = p10 + p11, py1 = p01 + p11;
    const double px0 = 1.0 - px1, py0 = 1.0 - py1;
    auto term = [](double pxy, double px, double py) {
        if (pxy <= 0.0) return 0.0;
        return pxy * std::log2(pxy / (px * py));
    };
    return term(p00, px0, py0) + term(p01, px0, py1) + term(p10, px1, py0) + term(p11, px1, py1);
}

// I(X;Y) in bits as a function of (E[X], E[Y], E[XY]); the four-term closed
// form with the 0*log(0/.) = 0 convention at the boundary. Throws
// InfeasibleMoments when (x, y, z) cannot come from a 2x2 joint.
inline double mi_from_moments(double x, double y, double z, double slack = 1e-12) {
    if (x < -slack || x > 1.0 + slack || y < -slack || y > 1.0 + slack)
        throw InfeasibleMoments("means outside [0,1]");
    if (z < -slack || z > std::min(x, y) + slack || 1.0 + z - x - y < -slack)
        throw InfeasibleMoments("cross moment incompatible with means");
    auto term = [](double num, double den) {
        if (num <= 0.0) return 0.0;
        return num * std::log2(num / den);
    };
    const double p11 = std::max(z, 0.0);
    const double p10 = std::max(x - z, 0.0);
    const double p01 = std::max(y - z, 0.0);
    const double p00 = std::max(1.0 + z - x - y, 0.0);
    return term(p11, x * y) + term(p10, x * (1.0 - y)) + term(p01, (1.0 - x) * y) +
           term(p00, (1.0 - x) * (1.0 - y));
}

// ---- Chow-Liu ----------------------------------------------------------------

struct SkeletonEdgeSet {
    std::vector<std::pair<int, int>> edges; // (i, j) with i < j, sorted, unique

    bool operator==(const SkeletonEdgeSet& o) const { return edges == o.edges; }

    void normalize() {
        for (auto& e : edges)
            if (e.first > e.second) std::swap(e.first, e.second);
        std::sort(edges.begin(), edges.end());
        edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
        for (const auto& e : edges)
            if (e.first == e.second) throw InvalidParameter("skeleton has a self-loop");
    }
};

inline SkeletonEdgeSet skeleton_of(const DagStructure& s) {
    SkeletonEdgeSet sk;
    sk.edges = s.skeleton_edges();
    sk.normalize();
    return sk;
}

// Maximum-weight spanning tree over a symmetric weight table, ties broken by
// lexicographic edge order (Kruskal over edges sorted by weight descending,
// then (i, j) ascending). The recovered tree only depends on the relative
// order of weights.
inline SkeletonEdgeSet max_weight_spanning_tree(const std::vector<std::vector<double>>& weight) {
    const int n = static_cast<int>(weight.size());
    if (n < 2) throw InvalidParameter("spanning tree needs n >= 2");
    struct Edge {
        double w;
        int i, j;
    };
    std::vector<Edge> edges;
    edges.reserve(static_cast<std::size_t>(n) * (n - 1) / 2);
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) edges.push_back({weight[i][j], i, j});
    std::stable_sort(edges.begin(), edges.end(), [](const Edge& a, const Edge& b) {
        if (a.w != b.w) return a.w > b.w;
        if (a.i != b.i) return a.i < b.i;
        return a.j < b.j;
    });
    std::vector<int> root(static_cast<std::size_t>(n));
    std::iota(root.begin(), root.end(), 0);
    auto find = [&](int v) {
        while (root[static_cast<std::size_t>(v)] != v) {
            root[static_cast<std::size_t>(v)] = root[static_cast<std::size_t>(root[static_cast<std::size_t>(v)])];
            v = root[static_cast<std::size_t>(v)];
        }
        return v;
    };
    SkeletonEdgeSet out;
    for (const auto& e : edges) {
        const int a = find(e.i), b = find(e.j);
        if (a == b) continue;
        root[static_cast<std::size_t>(a)] = b;
        out.edges.emplace_back(e.i, e.j);
        if (static_cast<int>(out.edges.size()) == n - 1) break;
    }
    out.normalize();
    return out;
}

// Pairwise mutual-information weights from a moment table, with estimates
// projected into the feasible moment region.
inline std::vector<std::vector<double>> mi_weight_table(const MomentTable& moments) {
    const int n = static_cast<int>(moments.mean.size());
    std::vector<std::vector<double>> w(static_cast<std::size_t>(n),
                                       std::vector<double>(static_cast<std::size_t>(n), 0.0));
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
            const double x = std::clamp(moments.mean[static_cast<std::size_t>(i)], 0.0, 1.0);
            const double y = std::clamp(moments.mean[static_cast<std::size_t>(j)], 0.0, 1.0);
            const double z = std::clamp(moments.cross[i][j], std::max(0.0, x + y - 1.0), std::min(x, y));
            w[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = mi_from_moments(x, y, z);
            w[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)] =
                w[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
        }
    return w;
}

inline SkeletonEdgeSet chow_liu(const MomentTable& moments) {
    if (moments.mean.size() < 2) throw InvalidParameter("Chow-Liu needs n >= 2");
    return max_weight_spanning_tree(mi_weight_table(moments));
}

inline SkeletonEdgeSet chow_liu(const BayesNet& net, int cap = kEnumerationCap) {
    return chow_liu(exact_moment_table(net, cap));
}

// ---- tree structure test -------------------------------------------------------

struct TreeTestParams {
    double kappa = 0.0;   // c gamma^2 / (2 ln 2), the per-edge MI floor
    double c_prime = 0.0; // c / 2
    double lambda = 0.0;  // 16 log2(2/c), Lipschitz constant of the MI map
    double tau = 0.0;     // (kappa - (1 - 2 c'^2) kappa) / (4 lambda)
};

inline TreeTestParams tree_test_params(double c, double gamma) {
    if (!(c > 0.0 && c < 0.5)) throw InvalidParameter("c must lie in (0, 1/2)");
    if (!(gamma > 0.0 && gamma <= 1.0)) throw InvalidParameter("gamma must lie in (0,1]");
    TreeTestParams p;
    p.kappa = c * gamma * gamma / (2.0 * std::numbers::ln2);
    p.c_prime = c / 2.0;
    p.lambda = 16.0 * std::log2(2.0 / c);
    p.tau = (p.kappa - (1.0 - 2.0 * p.c_prime * p.c_prime) * p.kappa) / (4.0 * p.lambda);
    return p;
}

inline std::uint64_t tree_test_sample_size(int n, double c, double gamma) {
    const TreeTestParams p = tree_test_params(c, gamma);
    return static_cast<std::uint64_t>(
        std::ceil(std::log(std::max(n, 2)) / (p.tau * p.tau)));
}

// Moment-comparison structure check for a known balanced non-degenerate tree:
// rejects if some pairwise conditional marginal leaves [c', 1-c'] or if some
// first/second moment deviates from Q's exact moment by more than tau.
inline Verdict tree_structure_test(const BayesNet& q, const MomentTable& observed, double c,
                                   double gamma, int cap = kEnumerationCap) {
    for (const auto& ps : q.structure().parents)
        if (ps.size() > 1) throw InvalidParameter("tree test needs a tree-structured reference");
    const TreeTestParams p = tree_test_params(c, gamma);
    const int n = q.n();

    // Balancedness screen on the observed moments.
    double worst = 0.5;
    for (int i = 0; i < n; ++i) {
        const double mi = observed.mean[static_cast<std::size_t>(i)];
        worst = std::min(worst, std::min(mi, 1.0 - mi));
        for (int j = 0; j < n; ++j) {
            if (i == j) continue;
            const double mj = observed.mean[static_cast<std::size_t>(j)];
            if (mj > 0.0 && mj < 1.0) {
                const double c1 = observed.cross[i][j] / mj;                   // Pr[X_i=1 | X_j=1]
                const double c0 = (mi - observed.cross[i][j]) / (1.0 - mj);    // Pr[X_i=1 | X_j=0]
                worst = std::min({worst, c1, 1.0 - c1, c0, 1.0 - c0});
            }
        }
    }
    if (worst < p.c_prime) {
        Verdict v = make_verdict(true, p.c_prime - worst, 0.0, 0, "statistic");
        v.trigger = "conditional-marginal-unbalanced";
        return v;
    }

    const MomentTable truth = exact_moment_table(q, cap);
    double max_dev = 0.0;
    for (int i = 0; i < n; ++i) {
        max_dev = std::max(max_dev, std::fabs(observed.mean[static_cast<std::size_t>(i)] -
                                              truth.mean[static_cast<std::size_t>(i)]));
        for (int j = i + 1; j < n; ++j)
            max_dev = std::max(max_dev, std::fabs(observed.cross[i][j] - truth.cross[i][j]));
    }
    return make_verdict(max_dev > p.tau, max_dev, p.tau, 0, "statistic");
}

inline Verdict tree_structure_test(const BayesNet& q, SampleSource& source, double c, double gamma,
                                   std::uint64_t m_override = 0, int cap = kEnumerationCap) {
    std::uint64_t m = m_override ? m_override : tree_test_sample_size(q.n(), c, gamma);
    if (m_override == 0 && m > 1000000000ULL)
        throw InvalidParameter("tree test sample size " + std::to_string(m) +
                               " is impractical; pass m_override");
    SampleBatch batch = collect(source, m);
    const TreeTestParams p = tree_test_params(c, gamma);
    Verdict v = tree_structure_test(q, empirical_moments(batch, p.tau), c, gamma, cap);
    v.samples_used = m;
    return v;
}

} // namespace bnprop
