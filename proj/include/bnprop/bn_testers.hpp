#pragma once

// Known-structure identity and closeness testers for Bayes nets, plus the
// unknown-structure compositions (structure test first, then the known-
// structure statistic).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "bnprop/bayes_net.hpp"
#include "bnprop/errors.hpp"
#include "bnprop/exact.hpp"
#include "bnprop/product_testers.hpp"
#include "bnprop/rng.hpp"
#include "bnprop/sampling.hpp"
#include "bnprop/structure.hpp"
#include "bnprop/verdict.hpp"

namespace bnprop {

struct BnTesterOptions {
    double alpha = 64.0; // sample-size constant: m = ceil(alpha 2^(d/2) sqrt(n) / eps^2)
    double beta = 16.0;  // balancedness precondition constant
    std::uint64_t seed = 0;
};

inline std::uint64_t bn_sample_size(int n, int d, double eps, double alpha) {
    return static_cast<std::uint64_t>(std::ceil(
        alpha * std::pow(2.0, 0.5 * d) * std::sqrt(static_cast<double>(n)) / (eps * eps)));
}

// Requires c >= beta ln(n)/m and C >= beta (d + ln n)/m; throws otherwise.
inline void check_balancedness_precondition(const BalancednessReport& rep, int n, int d,
                                            std::uint64_t m, double beta) {
    const double logn = std::log(static_cast<double>(std::max(n, 2)));
    const double md = static_cast<double>(m);
    if (rep.c < beta * logn / md)
        throw BalancednessViolation("c = " + std::to_string(rep.c) + " below " +
                                    std::to_string(beta * logn / md));
    if (rep.C < beta * (d + logn) / md)
        throw BalancednessViolation("C = " + std::to_string(rep.C) + " below " +
                                    std::to_string(beta * (d + logn) / md));
}

// Per-configuration identity statistic on the first N matching samples, with
// Z ones and Y = N - Z zeros against reference conditional q:
//   (((1-q)Z - qY)^2 + (2q-1)Z - q^2 (Z+Y)) / (N (N-1)).
// Unbiased for (p - q)^2.
inline double bn_identity_config_stat(double q, double z, double population) {
    const double y = population - z;
    const double a = (1.0 - q) * z - q * y;
    return (a * a + (2.0 * q - 1.0) * z - q * q * (z + y)) / (population * (population - 1.0));
}

// Known-structure identity test against the explicit balanced net Q. One pass
// of m samples; rejects outright when some parental configuration shows up
// fewer than N_{i,a} or more than 2 N_{i,a} times; otherwise thresholds the
// weighted statistic at eps^2/32. Reference conditionals above 1/2 are
// handled by counting zeros instead of ones for that configuration.
inline Verdict bn_identity_known_structure(const BayesNet& q, SampleSource& source, double eps,
                                           const BnTesterOptions& opts = {}) {
    if (!(eps > 0.0 && eps < 1.0)) throw InvalidParameter("eps must lie in (0,1)");
    if (q.n() != source.n()) throw InvalidParameter("reference and source dimensions differ");
    const int n = q.n(), d = q.max_in_degree();
    const std::uint64_t m = bn_sample_size(n, d, eps, opts.alpha);

    const BalancednessReport rep = balancedness(q);
    check_balancedness_precondition(rep, n, d, m, opts.beta);

    // Per-configuration targets N_{i,a} = m Pr_Q[Pi_{i,a}] / sqrt(2).
    std::vector<std::vector<std::uint64_t>> target(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        target[static_cast<std::size_t>(i)].resize(static_cast<std::size_t>(q.config_count(i)));
        for (int a = 0; a < q.config_count(i); ++a) {
            const auto t = static_cast<std::uint64_t>(
                std::ceil(static_cast<double>(m) * rep.config_probs[i][a] / std::numbers::sqrt2));
            if (t < 2)
                throw BalancednessViolation("configuration target below 2; Q is too unbalanced");
            target[static_cast<std::size_t>(i)][static_cast<std::size_t>(a)] = t;
        }
    }

    std::vector<std::vector<std::uint64_t>> seen(static_cast<std::size_t>(n));
    std::vector<std::vector<std::uint64_t>> ones(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        seen[static_cast<std::size_t>(i)].assign(static_cast<std::size_t>(q.config_count(i)), 0);
        ones[static_cast<std::size_t>(i)].assign(static_cast<std::size_t>(q.config_count(i)), 0);
    }
    for (std::uint64_t t = 0; t < m; ++t) {
        const std::uint64_t x = source.next();
        for (int i = 0; i < n; ++i) {
            const std::uint32_t a = q.parent_assignment(i, x);
            auto& cnt = seen[static_cast<std::size_t>(i)][a];
            if (cnt < target[static_cast<std::size_t>(i)][a])
                ones[static_cast<std::size_t>(i)][a] += (x >> i) & 1u;
            ++cnt;
        }
    }

    const double threshold = eps * eps / 32.0;
    for (int i = 0; i < n; ++i)
        for (int a = 0; a < q.config_count(i); ++a) {
            const std::uint64_t got = seen[static_cast<std::size_t>(i)][static_cast<std::size_t>(a)];
            const std::uint64_t want = target[static_cast<std::size_t>(i)][static_cast<std::size_t>(a)];
            if (got < want)
                return forced_reject(threshold, threshold, m, "undersampled-config", "statistic");
            if (got > 2 * want)
                return forced_reject(threshold, threshold, m, "oversampled-config", "statistic");
        }

    double w = 0.0;
    for (int i = 0; i < n; ++i)
        for (int a = 0; a < q.config_count(i); ++a) {
            const double pop = static_cast<double>(
                target[static_cast<std::size_t>(i)][static_cast<std::size_t>(a)]);
            double qe = q.entry(i, a);
            double z = static_cast<double>(ones[static_cast<std::size_t>(i)][static_cast<std::size_t>(a)]);
            if (qe > 0.5) { // count zeros against the flipped reference
                qe = 1.0 - qe;
                z = pop - z;
            }
            w += rep.config_probs[i][a] * bn_identity_config_stat(qe, z, pop) / (qe * (1.0 - qe));
        }
    Verdict v = make_verdict(w >= threshold, w, threshold, m, "statistic");
    return v;
}

// Thought-experiment variant of the identity statistic: keeps drawing until
// every configuration reaches its target, with no accept/reject guards.
// Used by the unbiasedness checks; returns (W, samples drawn).
struct BnIdentityStatistic {
    double statistic = 0.0;
    std::uint64_t samples_used = 0;
    // Unweighted per-configuration W_{i,a}, flattened by node then assignment;
    // distinct configurations are uncorrelated.
    std::vector<double> per_config;
};

inline BnIdentityStatistic bn_identity_statistic_unconditional(const BayesNet& q,
                                                               SampleSource& source, double eps,
                                                               const BnTesterOptions& opts = {},
                                                               std::uint64_t budget_factor = 100) {
    const int n = q.n(), d = q.max_in_degree();
    const std::uint64_t m = bn_sample_size(n, d, eps, opts.alpha);
    const BalancednessReport rep = balancedness(q);

    std::vector<std::vector<std::uint64_t>> target(static_cast<std::size_t>(n)),
        seen(static_cast<std::size_t>(n)), ones(static_cast<std::size_t>(n));
    std::uint64_t pending = 0;
    for (int i = 0; i < n; ++i) {
        const auto cc = static_cast<std::size_t>(q.config_count(i));
        target[static_cast<std::size_t>(i)].resize(cc);
        seen[static_cast<std::size_t>(i)].assign(cc, 0);
        ones[static_cast<std::size_t>(i)].assign(cc, 0);
        for (std::size_t a = 0; a < cc; ++a) {
            target[static_cast<std::size_t>(i)][a] = std::max<std::uint64_t>(
                2, static_cast<std::uint64_t>(std::ceil(
                       static_cast<double>(m) * rep.config_probs[i][a] / std::numbers::sqrt2)));
            ++pending;
        }
    }
    std::uint64_t used = 0;
    const std::uint64_t budget = budget_factor * m;
    while (pending > 0 && used < budget) {
        const std::uint64_t x = source.next();
        ++used;
        for (int i = 0; i < n; ++i) {
            const std::uint32_t a = q.parent_assignment(i, x);
            auto& cnt = seen[static_cast<std::size_t>(i)][a];
            if (cnt < target[static_cast<std::size_t>(i)][a]) {
                ones[static_cast<std::size_t>(i)][a] += (x >> i) & 1u;
                if (++cnt == target[static_cast<std::size_t>(i)][a]) --pending;
            }
        }
    }
    if (pending > 0) throw SampleSourceExhausted("statistic budget exhausted before fill");

    BnIdentityStatistic out;
    out.samples_used = used;
    for (int i = 0; i < n; ++i)
        for (int a = 0; a < q.config_count(i); ++a) {
            const double pop = static_cast<double>(
                target[static_cast<std::size_t>(i)][static_cast<std::size_t>(a)]);
            double qe = q.entry(i, a);
            double z = static_cast<double>(ones[static_cast<std::size_t>(i)][static_cast<std::size_t>(a)]);
            if (qe > 0.5) {
                qe = 1.0 - qe;
                z = pop - z;
            }
            const double w = bn_identity_config_stat(qe, z, pop);
            out.per_config.push_back(w);
            out.statistic += rep.config_probs[i][a] * w / (qe * (1.0 - qe));
        }
    return out;
}

// ---- known-structure closeness (two unknown nets, same DAG) -----------------

// Stage 1: m samples from each source; reject when some configuration's counts
// differ by more than a factor 4 between the sources; estimate conditionals
// and flip configurations whose pooled estimate exceeds 1/2. Stage 2: draw
// Poisson(count) matching samples per configuration from each source (total
// budget 10m) and threshold W = sum ((U-V)^2 - (U+V))/(U+V) at eps^2/288 * m.
inline Verdict bn_closeness_known_structure(const DagStructure& s, SampleSource& source_p,
                                            SampleSource& source_q, double eps,
                                            const BnTesterOptions& opts = {}) {
    if (!(eps > 0.0 && eps < 1.0)) throw InvalidParameter("eps must lie in (0,1)");
    if (source_p.n() != s.n || source_q.n() != s.n)
        throw InvalidParameter("source dimension does not match structure");
    const int n = s.n, d = s.max_in_degree;
    const std::uint64_t m = bn_sample_size(n, d, eps, opts.alpha);
    const double md = static_cast<double>(m);
    const double threshold = eps * eps / 288.0 * md;

    // A uniform reference net over s gives the shared config indexing.
    std::vector<std::vector<double>> half;
    half.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
        half.emplace_back(std::size_t{1} << s.parents[i].size(), 0.5);
    const BayesNet ref(s, std::move(half));

    const auto est_count = static_cast<std::uint64_t>(
        std::ceil(48.0 * (d + std::log(static_cast<double>(std::max(n, 2))) + std::log(20.0))));

    struct Counts {
        std::vector<std::vector<std::uint64_t>> seen, est_seen, est_ones;
    };
    auto make_counts = [&] {
        Counts c;
        c.seen.resize(static_cast<std::size_t>(n));
        c.est_seen.resize(static_cast<std::size_t>(n));
        c.est_ones.resize(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) {
            const auto cc = std::size_t{1} << s.parents[i].size();
            c.seen[static_cast<std::size_t>(i)].assign(cc, 0);
            c.est_seen[static_cast<std::size_t>(i)].assign(cc, 0);
            c.est_ones[static_cast<std::size_t>(i)].assign(cc, 0);
        }
        return c;
    };
    auto absorb = [&](Counts& c, std::uint64_t x) {
        for (int i = 0; i < n; ++i) {
            const std::uint32_t a = ref.parent_assignment(i, x);
            ++c.seen[static_cast<std::size_t>(i)][a];
            if (c.est_seen[static_cast<std::size_t>(i)][a] < est_count) {
                ++c.est_seen[static_cast<std::size_t>(i)][a];
                c.est_ones[static_cast<std::size_t>(i)][a] += (x >> i) & 1u;
            }
        }
    };

    Counts cp = make_counts(), cq = make_counts();
    for (std::uint64_t t = 0; t < m; ++t) {
        absorb(cp, source_p.next());
        absorb(cq, source_q.next());
    }
    std::uint64_t used = 2 * m;

    std::vector<std::vector<bool>> flip(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        const auto cc = std::size_t{1} << s.parents[i].size();
        flip[static_cast<std::size_t>(i)].assign(cc, false);
        for (std::size_t a = 0; a < cc; ++a) {
            const std::uint64_t np = cp.seen[static_cast<std::size_t>(i)][a];
            const std::uint64_t nq = cq.seen[static_cast<std::size_t>(i)][a];
            if (np == 0 && nq == 0) continue;
            if (np > 4 * nq || nq > 4 * np)
                return forced_reject(static_cast<double>(std::max(np, nq)),
                                     4.0 * static_cast<double>(std::min(np, nq)), used,
                                     "config-count-mismatch", "preprocess");
            double pooled = 0.0, denom = 0.0;
            if (cp.est_seen[static_cast<std::size_t>(i)][a] > 0) {
                pooled += static_cast<double>(cp.est_ones[static_cast<std::size_t>(i)][a]);
                denom += static_cast<double>(cp.est_seen[static_cast<std::size_t>(i)][a]);
            }
            if (cq.est_seen[static_cast<std::size_t>(i)][a] > 0) {
                pooled += static_cast<double>(cq.est_ones[static_cast<std::size_t>(i)][a]);
                denom += static_cast<double>(cq.est_seen[static_cast<std::size_t>(i)][a]);
            }
            if (denom > 0.0 && pooled / denom > 0.5) flip[static_cast<std::size_t>(i)][a] = true;
        }
    }

    // Stage 2: Poissonized per-configuration one-counts.
    Rng rng(opts.seed);
    std::vector<std::vector<std::uint64_t>> want(static_cast<std::size_t>(n));
    std::uint64_t pending_p = 0, pending_q = 0;
    for (int i = 0; i < n; ++i) {
        const auto cc = std::size_t{1} << s.parents[i].size();
        want[static_cast<std::size_t>(i)].resize(cc);
        for (std::size_t a = 0; a < cc; ++a) {
            const auto lam = static_cast<double>(cp.seen[static_cast<std::size_t>(i)][a]);
            const auto w = static_cast<std::uint64_t>(rng.poisson(lam));
            want[static_cast<std::size_t>(i)][a] = w;
            if (w > 0) {
                ++pending_p;
                ++pending_q;
            }
        }
    }

    Counts fp = make_counts(), fq = make_counts(); // reuse: seen = matched, est_ones = one-counts
    auto feed = [&](Counts& c, std::uint64_t x, std::uint64_t& pending) {
        for (int i = 0; i < n; ++i) {
            const std::uint32_t a = ref.parent_assignment(i, x);
            auto& got = c.seen[static_cast<std::size_t>(i)][a];
            if (got < want[static_cast<std::size_t>(i)][a]) {
                const bool bit = (x >> i) & 1u;
                c.est_ones[static_cast<std::size_t>(i)][a] +=
                    flip[static_cast<std::size_t>(i)][a] ? !bit : bit;
                if (++got == want[static_cast<std::size_t>(i)][a]) --pending;
            }
        }
    };
    const std::uint64_t budget = 10 * m;
    std::uint64_t stage2 = 0;
    while ((pending_p > 0 || pending_q > 0)) {
        if (stage2 >= budget)
            return forced_reject(static_cast<double>(stage2), static_cast<double>(budget),
                                 used + stage2, "sample-budget-exceeded", "statistic");
        if (pending_p > 0) {
            feed(fp, source_p.next(), pending_p);
            ++stage2;
        }
        if (pending_q > 0 && stage2 < budget) {
            feed(fq, source_q.next(), pending_q);
            ++stage2;
        }
    }
    used += stage2;

    double w = 0.0;
    for (int i = 0; i < n; ++i) {
        const auto cc = std::size_t{1} << s.parents[i].size();
        for (std::size_t a = 0; a < cc; ++a)
            w += closeness_heavy_term(
                static_cast<double>(fp.est_ones[static_cast<std::size_t>(i)][a]),
                static_cast<double>(fq.est_ones[static_cast<std::size_t>(i)][a]));
    }
    return make_verdict(w >= threshold, w, threshold, used, "statistic");
}

// ---- unknown-structure compositions ------------------------------------------

struct UnknownStructureOptions {
    BnTesterOptions tester;
    StructureTestOptions structure;
};

// Audits Q (balanced, gamma-non-degenerate), tests the source against Q's
// structure, and on acceptance runs the known-structure identity test.
inline Verdict bn_identity_unknown_structure(const BayesNet& q, SampleSource& source, double eps,
                                             double gamma, int d,
                                             const UnknownStructureOptions& opts = {}) {
    if (!(gamma > 0.0 && gamma < 1.0)) throw InvalidParameter("gamma must lie in (0,1)");
    if (d < q.max_in_degree()) throw InvalidParameter("degree bound below Q's in-degree");
    if (q.n() <= kEnumerationCap) {
        const DependenceAudit audit = nondegeneracy_interval(q, d);
        if (!audit.triples.empty() && audit.gamma_lower < gamma)
            throw InvalidParameter("Q fails the gamma-non-degeneracy audit: lower bound " +
                                   std::to_string(audit.gamma_lower));
    }
    Verdict st = structure_test(q.structure(), source, gamma, d, opts.structure);
    if (!st.accepted()) {
        st.stage = "structure";
        return st;
    }
    Verdict id = bn_identity_known_structure(q, source, eps, opts.tester);
    id.samples_used += st.samples_used;
    return id;
}

// Recovers both skeletons via conditional-independence tests over all
// (i, j, S) triples, rejects if they differ, then delegates to the known-
// structure closeness tester with edges oriented by the given node ordering.
inline Verdict bn_closeness_unknown_structure(const std::vector<int>& ordering,
                                              SampleSource& source_p, SampleSource& source_q,
                                              double eps, double gamma, int d,
                                              const UnknownStructureOptions& opts = {}) {
    const int n = source_p.n();
    if (source_q.n() != n) throw InvalidParameter("source dimension mismatch");
    if (static_cast<int>(ordering.size()) != n) throw InvalidParameter("ordering size mismatch");
    if (!(gamma > 0.0 && gamma < 1.0)) throw InvalidParameter("gamma must lie in (0,1)");
    if (d < 0) throw InvalidParameter("degree must be non-negative");
    if (d >= n)
        throw EnumerationCapExceeded("conditioning sets of size >= n are not enumerable");
    check_triple_enumeration_cap(n, d);

    const double per_test_fail =
        opts.structure.overall_error * std::pow(static_cast<double>(n), -static_cast<double>(d + 2));
    const std::uint64_t m = ci_sample_count(d, gamma, per_test_fail, opts.structure.ci_constant);

    auto recover_skeleton = [&](SampleSource& src) {
        SampleBatch batch = collect(src, m);
        SkeletonEdgeSet sk;
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j) {
                bool edge = true; // edge iff dependent conditioned on every small S
                for_each_subset_up_to(n, i, j, d, [&](const std::vector<int>& cond) {
                    if (!edge) return;
                    if (conditional_covariance_stat(batch, i, j, cond) <= gamma / 3.0) edge = false;
                });
                if (edge) sk.edges.emplace_back(i, j);
            }
        sk.normalize();
        return sk;
    };
    const SkeletonEdgeSet sp = recover_skeleton(source_p);
    const SkeletonEdgeSet sq = recover_skeleton(source_q);
    std::uint64_t used = 2 * m;
    if (!(sp == sq)) {
        Verdict v = forced_reject(1.0, 1.0, used, "skeleton-mismatch", "structure");
        return v;
    }

    // Orient the common skeleton by the given topological ordering. The
    // statistic runs in ordering-relabeled coordinates (coordinate r = node
    // ordering[r]) so the recovered structure is topologically numbered and
    // still matches the permuted sample rows.
    std::vector<int> pos(static_cast<std::size_t>(n));
    for (int r = 0; r < n; ++r) {
        const int node = ordering[static_cast<std::size_t>(r)];
        if (node < 0 || node >= n) throw InvalidParameter("ordering entry out of range");
        pos[static_cast<std::size_t>(node)] = r;
    }
    std::vector<std::vector<int>> parents(static_cast<std::size_t>(n));
    for (const auto& [i, j] : sp.edges) {
        const int ri = pos[static_cast<std::size_t>(i)], rj = pos[static_cast<std::size_t>(j)];
        parents[static_cast<std::size_t>(std::max(ri, rj))].push_back(std::min(ri, rj));
    }
    for (const auto& ps : parents)
        if (static_cast<int>(ps.size()) > d)
            return forced_reject(1.0, 1.0, used, "degree-exceeded", "structure");
    const DagStructure recovered = validate_structure(parents);

    PermutedSource pp(source_p, ordering);
    PermutedSource pq(source_q, ordering);
    Verdict v = bn_closeness_known_structure(recovered, pp, pq, eps, opts.tester);
    v.samples_used += used;
    return v;
}

} // namespace bnprop
