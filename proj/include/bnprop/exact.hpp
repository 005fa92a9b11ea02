#pragma once

// Exact small-n machinery: joint enumeration, parental-configuration
// probabilities, distance formulas and bounds, balancedness, conditional
// covariances, and the conditional-independence surgery. These are the
// oracles every tester is checked against.
//
// Distance convention: all functions return or consume the L1 norm
// ||P-Q||_1 = sum_x |P(x)-Q(x)|; total variation is half of that.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "bnprop/bayes_net.hpp"
#include "bnprop/errors.hpp"
#include "bnprop/rng.hpp"

namespace bnprop {

inline constexpr int kEnumerationCap = 25;

inline void check_enumeration_cap(int n, int cap = kEnumerationCap) {
    if (n > cap)
        throw EnumerationCapExceeded("n = " + std::to_string(n) + " exceeds enumeration cap " +
                                     std::to_string(cap));
}

// Full joint table over {0,1}^n; entry index x has bit i = value of X_i.
inline std::vector<double> exact_joint(const BayesNet& net, int cap = kEnumerationCap) {
    check_enumeration_cap(net.n(), cap);
    const std::uint64_t size = std::uint64_t{1} << net.n();
    std::vector<double> joint(size);
    for (std::uint64_t x = 0; x < size; ++x) joint[x] = net.state_prob(x);
    return joint;
}

inline double l1_between(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t x = 0; x < a.size(); ++x) s += std::fabs(a[x] - b[x]);
    return s;
}

inline double tv_between(const std::vector<double>& a, const std::vector<double>& b) {
    return 0.5 * l1_between(a, b);
}

// Squared Hellinger distance (1/2) sum (sqrt(p)-sqrt(q))^2.
inline double hellinger2_between(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t x = 0; x < a.size(); ++x) {
        const double d = std::sqrt(a[x]) - std::sqrt(b[x]);
        s += d * d;
    }
    return 0.5 * s;
}

inline double l1_exact(const BayesNet& p, const BayesNet& q, int cap = kEnumerationCap) {
    if (p.n() != q.n()) throw StructureMismatch("nets have different dimension");
    return l1_between(exact_joint(p, cap), exact_joint(q, cap));
}

// Bernoulli KL divergence in nats; 0*log(0) = 0, q must lie in (0,1).
inline double bernoulli_kl(double p, double q) {
    double s = 0.0;
    if (p > 0.0) s += p * std::log(p / q);
    if (p < 1.0) s += (1.0 - p) * std::log((1.0 - p) / (1.0 - q));
    return s;
}

// Probability of every parental configuration, by marginalizing the exact joint.
// probs[i][a] = Pr[parents of i take assignment a].
inline std::vector<std::vector<double>> all_parent_config_probs(const BayesNet& net,
                                                                int cap = kEnumerationCap) {
    const auto joint = exact_joint(net, cap);
    std::vector<std::vector<double>> probs(net.n());
    for (int i = 0; i < net.n(); ++i) probs[i].assign(net.config_count(i), 0.0);
    for (std::uint64_t x = 0; x < joint.size(); ++x) {
        if (joint[x] == 0.0) continue;
        for (int i = 0; i < net.n(); ++i) probs[i][net.parent_assignment(i, x)] += joint[x];
    }
    return probs;
}

struct ConfigProb {
    double value = 0.0;
    double half_width = 0.0; // 0 when exact; 95% normal half-width when Monte-Carlo
};

inline std::uint64_t ancestral_draw(const BayesNet& net, Rng& rng) {
    std::uint64_t x = 0;
    for (int i = 0; i < net.n(); ++i)
        if (rng.bernoulli(net.entry(i, net.parent_assignment(i, x)))) x |= std::uint64_t{1} << i;
    return x;
}

// Exact within the enumeration cap, Monte-Carlo (1e6 draws) beyond it.
inline ConfigProb parent_config_prob(const BayesNet& net, const ParentalConfiguration& k,
                                     int cap = kEnumerationCap, std::uint64_t mc_seed = 0) {
    if (net.n() <= cap) {
        const auto probs = all_parent_config_probs(net, cap);
        return {probs[k.node][k.assignment], 0.0};
    }
    constexpr std::uint64_t draws = 1000000;
    Rng rng(mc_seed);
    std::uint64_t hits = 0;
    for (std::uint64_t t = 0; t < draws; ++t)
        if (net.parent_assignment(k.node, ancestral_draw(net, rng)) == k.assignment) ++hits;
    const double p = static_cast<double>(hits) / static_cast<double>(draws);
    return {p, 1.96 * std::sqrt(p * (1.0 - p) / static_cast<double>(draws))};
}

// D_KL(P||Q) in nats via the per-configuration decomposition
// sum_{(i,a)} Pr_P[Pi_{i,a}] * KL(Bern(p_{i,a}) || Bern(q_{i,a})).
inline double kl_same_structure(const BayesNet& p, const BayesNet& q, int cap = kEnumerationCap) {
    if (!p.same_structure(q)) throw StructureMismatch("KL requires identical structure");
    for (int i = 0; i < q.n(); ++i)
        for (double e : q.cpt()[i])
            if (e <= 0.0 || e >= 1.0)
                throw BoundaryProbability("Q cpt entry on boundary at node " + std::to_string(i));
    const auto probs = all_parent_config_probs(p, cap);
    double kl = 0.0;
    for (int i = 0; i < p.n(); ++i)
        for (int a = 0; a < p.config_count(i); ++a)
            kl += probs[i][a] * bernoulli_kl(p.entry(i, a), q.entry(i, a));
    return kl;
}

enum class ConfigWeight { P, Q };

// Chi-square style identity proxy sum_k Pr_W[Pi_k] (p_k-q_k)^2 / (q_k(1-q_k)).
// The P-weighted variant upper-bounds kl_same_structure; the Q-weighted one is
// the expectation of the known-structure identity statistic.
inline double chi2_identity_proxy(const BayesNet& p, const BayesNet& q,
                                  ConfigWeight weight = ConfigWeight::P,
                                  int cap = kEnumerationCap) {
    if (!p.same_structure(q)) throw StructureMismatch("proxy requires identical structure");
    for (int i = 0; i < q.n(); ++i)
        for (double e : q.cpt()[i])
            if (e <= 0.0 || e >= 1.0)
                throw BoundaryProbability("Q cpt entry on boundary at node " + std::to_string(i));
    const auto probs = all_parent_config_probs(weight == ConfigWeight::P ? p : q, cap);
    double s = 0.0;
    for (int i = 0; i < p.n(); ++i)
        for (int a = 0; a < p.config_count(i); ++a) {
            const double d = p.entry(i, a) - q.entry(i, a);
            const double qe = q.entry(i, a);
            s += probs[i][a] * d * d / (qe * (1.0 - qe));
        }
    return s;
}

// Upper bound on the squared Hellinger distance between same-structure nets:
// 2 sum_k sqrt(Pr_P[Pi_k] Pr_Q[Pi_k]) (p_k-q_k)^2 / ((p_k+q_k)(2-p_k-q_k)).
inline double hellinger_bound_bn(const BayesNet& p, const BayesNet& q, int cap = kEnumerationCap) {
    if (!p.same_structure(q)) throw StructureMismatch("bound requires identical structure");
    const auto pp = all_parent_config_probs(p, cap);
    const auto qp = all_parent_config_probs(q, cap);
    double s = 0.0;
    for (int i = 0; i < p.n(); ++i)
        for (int a = 0; a < p.config_count(i); ++a) {
            const double pe = p.entry(i, a), qe = q.entry(i, a);
            const double num = (pe - qe) * (pe - qe);
            if (num == 0.0) continue;
            const double den = (pe + qe) * (2.0 - pe - qe);
            s += std::sqrt(pp[i][a] * qp[i][a]) * num / den;
        }
    return 2.0 * s;
}

struct BalancednessReport {
    double c = 0.0; // min over (i,a) of min(p, 1-p)
    double C = 0.0; // min over (i,a) of Pr[Pi_{i,a}]
    std::vector<std::vector<double>> config_probs;
};

inline BalancednessReport balancedness(const BayesNet& net, int cap = kEnumerationCap,
                                       std::uint64_t mc_seed = 0) {
    BalancednessReport rep;
    rep.c = 0.5;
    for (int i = 0; i < net.n(); ++i)
        for (double e : net.cpt()[i]) rep.c = std::min(rep.c, std::min(e, 1.0 - e));
    if (net.n() <= cap) {
        rep.config_probs = all_parent_config_probs(net, cap);
    } else {
        // Single Monte-Carlo pass counting all configurations at once.
        constexpr std::uint64_t draws = 1000000;
        Rng rng(mc_seed);
        rep.config_probs.assign(net.n(), {});
        std::vector<std::vector<std::uint64_t>> hits(net.n());
        for (int i = 0; i < net.n(); ++i) hits[i].assign(net.config_count(i), 0);
        for (std::uint64_t t = 0; t < draws; ++t) {
            const std::uint64_t x = ancestral_draw(net, rng);
            for (int i = 0; i < net.n(); ++i) ++hits[i][net.parent_assignment(i, x)];
        }
        for (int i = 0; i < net.n(); ++i) {
            rep.config_probs[i].resize(hits[i].size());
            for (std::size_t a = 0; a < hits[i].size(); ++a)
                rep.config_probs[i][a] =
                    static_cast<double>(hits[i][a]) / static_cast<double>(draws);
        }
    }
    rep.C = 1.0;
    for (const auto& row : rep.config_probs)
        for (double v : row) rep.C = std::min(rep.C, v);
    return rep;
}

// ---- moments -------------------------------------------------------------

inline std::vector<double> exact_means(const std::vector<double>& joint, int n) {
    std::vector<double> mu(n, 0.0);
    for (std::uint64_t x = 0; x < joint.size(); ++x) {
        if (joint[x] == 0.0) continue;
        for (int i = 0; i < n; ++i)
            if ((x >> i) & 1u) mu[i] += joint[x];
    }
    return mu;
}

// cross[i][j] = E[X_i X_j]; diagonal holds the means.
inline std::vector<std::vector<double>> exact_cross_moments(const std::vector<double>& joint, int n) {
    std::vector<std::vector<double>> m(n, std::vector<double>(n, 0.0));
    for (std::uint64_t x = 0; x < joint.size(); ++x) {
        const double p = joint[x];
        if (p == 0.0) continue;
        for (int i = 0; i < n; ++i) {
            if (!((x >> i) & 1u)) continue;
            m[i][i] += p;
            for (int j = i + 1; j < n; ++j)
                if ((x >> j) & 1u) {
                    m[i][j] += p;
                    m[j][i] += p;
                }
        }
    }
    return m;
}

// ---- conditional covariance and the independence surgery ------------------

struct ConditionalCovariance {
    // One row per configuration a of the conditioning set (packed bits,
    // ascending order of the set's sorted indices).
    std::vector<double> mass; // Pr[X_S = a]
    std::vector<double> cov;  // Cov(X_i, X_j | X_S = a); 0 when mass is 0
    double beta = 0.0;        // sum_a mass * |cov|
};

inline ConditionalCovariance conditional_covariance_exact(const std::vector<double>& joint,
                                                          [[maybe_unused]] int n, int i, int j,
                                                          const std::vector<int>& cond) {
    const int s = static_cast<int>(cond.size());
    ConditionalCovariance out;
    out.mass.assign(std::size_t{1} << s, 0.0);
    out.cov.assign(std::size_t{1} << s, 0.0);
    std::vector<double> e1(out.mass.size(), 0.0), e2(out.mass.size(), 0.0), e12(out.mass.size(), 0.0);
    for (std::uint64_t x = 0; x < joint.size(); ++x) {
        const double p = joint[x];
        if (p == 0.0) continue;
        std::uint32_t a = 0;
        for (int k = 0; k < s; ++k) a |= static_cast<std::uint32_t>((x >> cond[k]) & 1u) << k;
        out.mass[a] += p;
        const bool bi = (x >> i) & 1u, bj = (x >> j) & 1u;
        if (bi) e1[a] += p;
        if (bj) e2[a] += p;
        if (bi && bj) e12[a] += p;
    }
    for (std::size_t a = 0; a < out.mass.size(); ++a) {
        if (out.mass[a] <= 0.0) continue;
        const double w = out.mass[a];
        out.cov[a] = e12[a] / w - (e1[a] / w) * (e2[a] / w);
        out.beta += w * std::fabs(out.cov[a]);
    }
    return out;
}

// The explicit adjustment that removes the conditional dependence of X_i and
// X_j given X_S: each (a,b,c) cell changes by -(-1)^(b+c) Cov_a Pr[X_S=a],
// spread proportionally inside the cell. The result is a distribution with
// all conditional covariances zero and ||P - out||_1 = 4 beta exactly.
inline std::vector<double> conditional_independence_surgery(const std::vector<double>& joint, int n,
                                                            int i, int j,
                                                            const std::vector<int>& cond) {
    const auto cc = conditional_covariance_exact(joint, n, i, j, cond);
    const int s = static_cast<int>(cond.size());
    const std::size_t cells = std::size_t{1} << (s + 2);
    std::vector<double> cell_mass(cells, 0.0);
    auto cell_of = [&](std::uint64_t x) {
        std::uint32_t a = 0;
        for (int k = 0; k < s; ++k) a |= static_cast<std::uint32_t>((x >> cond[k]) & 1u) << k;
        const std::uint32_t b = (x >> i) & 1u, c = (x >> j) & 1u;
        return (a << 2) | (b << 1) | c;
    };
    for (std::uint64_t x = 0; x < joint.size(); ++x) cell_mass[cell_of(x)] += joint[x];

    std::vector<double> delta(cells, 0.0);
    for (std::size_t a = 0; a < cc.mass.size(); ++a) {
        const double amount = cc.cov[a] * cc.mass[a];
        if (amount == 0.0) continue;
        for (std::uint32_t b = 0; b < 2; ++b)
            for (std::uint32_t c = 0; c < 2; ++c) {
                const double sign = ((b + c) % 2 == 0) ? -1.0 : 1.0;
                delta[(a << 2) | (b << 1) | c] = sign * amount;
            }
    }

    std::vector<double> out(joint.size());
    const double spread = 1.0 / static_cast<double>(std::uint64_t{1} << (n - s - 2 >= 0 ? n - s - 2 : 0));
    for (std::uint64_t x = 0; x < joint.size(); ++x) {
        const std::size_t cell = cell_of(x);
        if (cell_mass[cell] > 0.0)
            out[x] = joint[x] * (1.0 + delta[cell] / cell_mass[cell]);
        else
            out[x] = joint[x] + delta[cell] * spread;
    }
    return out;
}

// ---- non-degeneracy audit --------------------------------------------------

struct DependenceAudit {
    struct Triple {
        int i = 0, j = 0;
        std::vector<int> cond;
        double beta = 0.0; // exact E_a[ |Cov(X_i, X_j | X_S = a)| ]
        double lo = 0.0;   // beta / 3
        double hi = 0.0;   // 2 beta
    };
    std::vector<Triple> triples;
    double gamma_lower = 0.0; // min over triples of beta/3; 0 if no triples
};

// For every condition-matching triple (i, j, S) with |S| <= d, brackets the
// TV distance-to-conditional-independence by [beta/3, 2 beta].
inline DependenceAudit nondegeneracy_interval(const BayesNet& net, int d,
                                              int cap = kEnumerationCap) {
    const auto joint = exact_joint(net, cap);
    DependenceAudit audit;
    audit.gamma_lower = -1.0;
    for (int i = 0; i < net.n(); ++i)
        for (int j = i + 1; j < net.n(); ++j)
            for_each_subset_up_to(net.n(), i, j, d, [&](const std::vector<int>& cond) {
                if (!matches_dependence_condition(net.structure(), i, j, cond)) return;
                const auto cc = conditional_covariance_exact(joint, net.n(), i, j, cond);
                DependenceAudit::Triple t;
                t.i = i;
                t.j = j;
                t.cond = cond;
                t.beta = cc.beta;
                t.lo = cc.beta / 3.0;
                t.hi = 2.0 * cc.beta;
                if (audit.gamma_lower < 0.0 || t.lo < audit.gamma_lower) audit.gamma_lower = t.lo;
                audit.triples.push_back(std::move(t));
            });
    if (audit.gamma_lower < 0.0) audit.gamma_lower = 0.0;
    return audit;
}

// Tree-sense non-degeneracy: min over single-parent nodes of
// |Pr[X_i=1 | parent=1] - Pr[X_i=1 | parent=0]|.
inline double tree_nondegeneracy(const BayesNet& net) {
    double g = 1.0;
    bool any = false;
    for (int i = 0; i < net.n(); ++i) {
        if (net.structure().parents[i].size() != 1) continue;
        any = true;
        g = std::min(g, std::fabs(net.entry(i, 1) - net.entry(i, 0)));
    }
    return any ? g : 0.0;
}

// ---- distance-to-conditional-independence oracle ---------------------------
//
// Upper bound on the minimum TV distance from `joint` to any distribution in
// which X_i and X_j are independent given X_S, found by local search over the
// conditionally-independent family on the (S,i,j)-marginal. Starts from the
// surgery output and the plug-in product of conditionals.
inline double distance_to_conditional_independence(const std::vector<double>& joint,
                                                   [[maybe_unused]] int n, int i, int j,
                                                   const std::vector<int>& cond) {
    const int s = static_cast<int>(cond.size());
    const std::size_t nconf = std::size_t{1} << s;
    // Marginal of P on (S, i, j), as cells[a][b << 1 | c].
    std::vector<std::array<double, 4>> cells(nconf, {0.0, 0.0, 0.0, 0.0});
    for (std::uint64_t x = 0; x < joint.size(); ++x) {
        if (joint[x] == 0.0) continue;
        std::uint32_t a = 0;
        for (int k = 0; k < s; ++k) a |= static_cast<std::uint32_t>((x >> cond[k]) & 1u) << k;
        const std::uint32_t b = (x >> i) & 1u, c = (x >> j) & 1u;
        cells[a][(b << 1) | c] += joint[x];
    }

    struct Params {
        std::vector<double> w, alpha, beta;
    };
    auto objective = [&](const Params& pr) {
        double l1 = 0.0;
        for (std::size_t a = 0; a < nconf; ++a) {
            const double w = pr.w[a], al = pr.alpha[a], be = pr.beta[a];
            l1 += std::fabs(cells[a][0] - w * (1 - al) * (1 - be));
            l1 += std::fabs(cells[a][1] - w * (1 - al) * be);
            l1 += std::fabs(cells[a][2] - w * al * (1 - be));
            l1 += std::fabs(cells[a][3] - w * al * be);
        }
        return 0.5 * l1; // TV
    };
    auto golden = [&](double lo, double hi, auto&& f) {
        constexpr double phi = 0.6180339887498949;
        double a = lo, b = hi;
        double x1 = b - phi * (b - a), x2 = a + phi * (b - a);
        double f1 = f(x1), f2 = f(x2);
        for (int it = 0; it < 60; ++it) {
            if (f1 < f2) {
                b = x2;
                x2 = x1;
                f2 = f1;
                x1 = b - phi * (b - a);
                f1 = f(x1);
            } else {
                a = x1;
                x1 = x2;
                f1 = f2;
                x2 = a + phi * (b - a);
                f2 = f(x2);
            }
        }
        return f1 < f2 ? x1 : x2;
    };
    auto refine = [&](Params pr) {
        double best = objective(pr);
        for (int sweep = 0; sweep < 60; ++sweep) {
            for (std::size_t a = 0; a < nconf; ++a) {
                for (auto* field : {&pr.alpha, &pr.beta}) {
                    const double cur = (*field)[a];
                    const double opt = golden(0.0, 1.0, [&](double v) {
                        (*field)[a] = v;
                        const double r = objective(pr);
                        (*field)[a] = cur;
                        return r;
                    });
                    (*field)[a] = opt;
                }
                for (std::size_t b2 = a + 1; b2 < nconf; ++b2) {
                    // Transfer mass between configurations a and b2.
                    const double wa = pr.w[a], wb = pr.w[b2];
                    const double t = golden(-wb, wa, [&](double v) {
                        pr.w[a] = wa - v;
                        pr.w[b2] = wb + v;
                        const double r = objective(pr);
                        pr.w[a] = wa;
                        pr.w[b2] = wb;
                        return r;
                    });
                    pr.w[a] = wa - t;
                    pr.w[b2] = wb + t;
                }
            }
            const double now = objective(pr);
            if (best - now < 1e-13) {
                best = now;
                break;
            }
            best = now;
        }
        return best;
    };

    // Start 1: plug-in product of conditionals.
    Params plug;
    plug.w.assign(nconf, 0.0);
    plug.alpha.assign(nconf, 0.5);
    plug.beta.assign(nconf, 0.5);
    for (std::size_t a = 0; a < nconf; ++a) {
        const double w = cells[a][0] + cells[a][1] + cells[a][2] + cells[a][3];
        plug.w[a] = w;
        if (w > 0.0) {
            plug.alpha[a] = (cells[a][2] + cells[a][3]) / w;
            plug.beta[a] = (cells[a][1] + cells[a][3]) / w;
        }
    }
    // The surgery output equals the plug-in product slice by slice, so start 1
    // already covers it. Start 2 perturbs the conditionals toward 1/2 to give
    // the local search a second basin.
    Params half = plug;
    for (std::size_t a = 0; a < nconf; ++a) {
        half.alpha[a] = std::clamp(0.5 * (half.alpha[a] + 0.5), 0.0, 1.0);
        half.beta[a] = std::clamp(0.5 * (half.beta[a] + 0.5), 0.0, 1.0);
    }
    return std::min(refine(plug), refine(half));
}

} // namespace bnprop
