#pragma once

// Monte-Carlo harness: turns a tester's probabilistic contract into accept /
// reject rates over seeded trials, with Wilson intervals and deterministic
// CSV output. Trial t always uses seed base_seed + t; reports are
// byte-identical across runs of the same build and config.

#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "bnprop/bayes_net.hpp"
#include "bnprop/bn_testers.hpp"
#include "bnprop/errors.hpp"
#include "bnprop/exact.hpp"
#include "bnprop/hard_instances.hpp"
#include "bnprop/product_testers.hpp"
#include "bnprop/sampling.hpp"
#include "bnprop/structure.hpp"
#include "bnprop/verdict.hpp"

namespace bnprop {

struct WilsonInterval {
    double lo = 0.0, hi = 1.0;
};

inline WilsonInterval wilson_interval(std::uint64_t successes, std::uint64_t total,
                                      double z = 1.959963984540054) {
    if (total == 0) return {std::nan(""), std::nan("")};
    const double nd = static_cast<double>(total);
    const double p = static_cast<double>(successes) / nd;
    const double z2 = z * z;
    const double denom = 1.0 + z2 / nd;
    const double center = p + z2 / (2.0 * nd);
    const double half = z * std::sqrt(p * (1.0 - p) / nd + z2 / (4.0 * nd * nd));
    return {(center - half) / denom, (center + half) / denom};
}

struct ExperimentConfig {
    std::string tester;
    std::string family;
    int n = 10;
    double eps = 0.3;
    double gamma = 0.0; // 0: derive from the instance where possible
    int d = 1;
    int k = 4;
    bool far = false; // false: null configuration, true: alternative
    int trials = 200;
    std::uint64_t seed = 1;
    std::uint64_t instance_seed = 1;
    double constant = 0.0; // tester constant override; 0 keeps the default
    double alpha = 64.0;
    double beta = 16.0;
    double c = 0.3;      // balancedness knob for tree families
    double gap = 0.25;   // minimum edge gap for tree families
    double delta = 0.12; // cpt perturbation for "far" net alternatives
    int threads = 1;
    std::vector<std::uint64_t> sweep_m;
    std::vector<int> sweep_n;
    std::vector<double> sweep_eps;

    static ExperimentConfig from_json(const nlohmann::json& j) {
        ExperimentConfig c;
        try {
            c.tester = j.at("tester").get<std::string>();
            c.family = j.at("family").get<std::string>();
            if (j.contains("n")) c.n = j.at("n").get<int>();
            if (j.contains("eps")) c.eps = j.at("eps").get<double>();
            if (j.contains("gamma")) c.gamma = j.at("gamma").get<double>();
            if (j.contains("d")) c.d = j.at("d").get<int>();
            if (j.contains("k")) c.k = j.at("k").get<int>();
            if (j.contains("far")) c.far = j.at("far").get<bool>();
            if (j.contains("trials")) c.trials = j.at("trials").get<int>();
            if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
            if (j.contains("instance_seed")) c.instance_seed = j.at("instance_seed").get<std::uint64_t>();
            if (j.contains("constant")) c.constant = j.at("constant").get<double>();
            if (j.contains("alpha")) c.alpha = j.at("alpha").get<double>();
            if (j.contains("beta")) c.beta = j.at("beta").get<double>();
            if (j.contains("c")) c.c = j.at("c").get<double>();
            if (j.contains("gap")) c.gap = j.at("gap").get<double>();
            if (j.contains("delta")) c.delta = j.at("delta").get<double>();
            if (j.contains("threads")) c.threads = j.at("threads").get<int>();
            if (j.contains("sweep_m")) c.sweep_m = j.at("sweep_m").get<std::vector<std::uint64_t>>();
            if (j.contains("sweep_n")) c.sweep_n = j.at("sweep_n").get<std::vector<int>>();
            if (j.contains("sweep_eps")) c.sweep_eps = j.at("sweep_eps").get<std::vector<double>>();
        } catch (const nlohmann::json::exception& e) {
            throw ConfigInvalid(e.what());
        }
        if (c.trials < 1) throw ConfigInvalid("trials must be >= 1");
        if (c.threads < 1) throw ConfigInvalid("threads must be >= 1");
        return c;
    }
};

struct SweepPoint {
    std::string family, tester;
    int n = 0;
    double eps = 0.0;
    std::uint64_t m = 0;
    int trials = 0;
    std::uint64_t accepts = 0, rejects = 0, errors = 0;
    double mean_samples = 0.0;
    WilsonInterval accept_rate; // Wilson 95% on the accept rate
    std::uint64_t seed = 0;
};

struct ErrorRateReport {
    std::vector<SweepPoint> rows;

    std::string csv() const {
        std::string out = "family,tester,n,eps,m,T,accept,reject,mean_samples,wilson_lo,wilson_hi,seed\n";
        char buf[512];
        for (const auto& r : rows) {
            std::snprintf(buf, sizeof buf, "%s,%s,%d,%.9g,%llu,%d,%llu,%llu,%.9g,%.9g,%.9g,%llu\n",
                          r.family.c_str(), r.tester.c_str(), r.n, r.eps,
                          static_cast<unsigned long long>(r.m), r.trials,
                          static_cast<unsigned long long>(r.accepts),
                          static_cast<unsigned long long>(r.rejects), r.mean_samples,
                          r.accept_rate.lo, r.accept_rate.hi,
                          static_cast<unsigned long long>(r.seed));
            out += buf;
        }
        return out;
    }

    nlohmann::json to_json() const {
        nlohmann::json rows_j = nlohmann::json::array();
        for (const auto& r : rows)
            rows_j.push_back({{"family", r.family},
                              {"tester", r.tester},
                              {"n", r.n},
                              {"eps", r.eps},
                              {"m", r.m},
                              {"T", r.trials},
                              {"accept", r.accepts},
                              {"reject", r.rejects},
                              {"errors", r.errors},
                              {"mean_samples", r.mean_samples},
                              {"wilson_lo", r.accept_rate.lo},
                              {"wilson_hi", r.accept_rate.hi},
                              {"seed", r.seed}});
        return {{"rows", rows_j}};
    }
};

// One tester invocation per trial; trial t derives all of its randomness from
// seed + t, so trials never share RNG state.
using TrialRunner = std::function<Verdict(std::uint64_t trial_seed)>;

struct PreparedExperiment {
    std::string family, tester;
    int n = 0;
    double eps = 0.0;
    std::uint64_t nominal_m = 0;
    TrialRunner run;
};

// ---- fixed demo structures -------------------------------------------------

// Tree with a fork at the root (0 -> 1, 0 -> 2) and a chain hanging off node
// 1; every edge gets a strong conditional gap. The fork makes condition (iv)
// triples non-trivial.
inline BayesNet make_fork_tree_net(int n, double lo = 0.15, double hi = 0.85) {
    if (n < 3) throw InvalidParameter("fork tree needs n >= 3");
    std::vector<std::vector<int>> parents(static_cast<std::size_t>(n));
    parents[1] = {0};
    parents[2] = {0};
    for (int i = 3; i < n; ++i) parents[static_cast<std::size_t>(i)] = {i - 1};
    std::vector<std::vector<double>> cpt(static_cast<std::size_t>(n));
    cpt[0] = {0.5};
    for (int i = 1; i < n; ++i) cpt[static_cast<std::size_t>(i)] = {lo, hi};
    return BayesNet(validate_structure(parents), std::move(cpt));
}

// The fork of make_fork_tree_net re-oriented into a collider: nodes 0, 1, 2
// carry the symmetric noisy-XOR parity distribution, which factorizes
// equivalently with the collider at any of the three nodes (in particular at
// node 0 over the fork's own skeleton, making it a wrong-v-structure twin).
// Every pair inside the triple is marginally independent.
inline BayesNet make_wrong_v_net(int n, double lo = 0.15, double hi = 0.85) {
    if (n < 3) throw InvalidParameter("needs n >= 3");
    std::vector<std::vector<int>> parents(static_cast<std::size_t>(n));
    parents[2] = {0, 1};
    for (int i = 3; i < n; ++i) parents[static_cast<std::size_t>(i)] = {i - 1};
    std::vector<std::vector<double>> cpt(static_cast<std::size_t>(n));
    cpt[0] = {0.5};
    cpt[1] = {0.5};
    cpt[2] = {lo, hi, hi, lo}; // noisy XOR of the two roots
    for (int i = 3; i < n; ++i) cpt[static_cast<std::size_t>(i)] = {lo, hi};
    return BayesNet(validate_structure(parents), std::move(cpt));
}

// Shifts every cpt entry by +-delta (alternating by a seeded coin), clamped
// into [floor, 1-floor]; the standard "same structure, certified far"
// alternative.
inline BayesNet perturb_net(const BayesNet& q, double delta, std::uint64_t seed,
                            double floor = 0.05) {
    Rng rng(mix_seed(seed, 0x70657274ULL));
    auto cpt = q.cpt();
    for (auto& row : cpt)
        for (auto& e : row) {
            const double shift = rng.bernoulli(0.5) ? delta : -delta;
            e = std::clamp(e + shift, floor, 1.0 - floor);
        }
    return BayesNet(q.structure(), std::move(cpt));
}

// ---- experiment construction -------------------------------------------------

inline PreparedExperiment prepare_experiment(const ExperimentConfig& cfg, int n, double eps,
                                             std::uint64_t m_override) {
    PreparedExperiment ex;
    ex.family = cfg.family + (cfg.far ? ":far" : ":null");
    ex.tester = cfg.tester;
    ex.n = n;
    ex.eps = eps;

    auto src_seed = [](std::uint64_t trial_seed, std::uint64_t tag) {
        return mix_seed(trial_seed, tag);
    };

    if (cfg.tester == "product_identity") {
        ProductSpec reference;
        ProductSpec source_spec;
        if (cfg.family == "uniformity") {
            reference.means.assign(static_cast<std::size_t>(n), 0.5);
            source_spec = cfg.far ? gen_product_uniformity_no(n, eps, cfg.instance_seed).spec
                                  : reference;
        } else if (cfg.family == "unbalanced") {
            const auto pair = gen_unbalanced_identity_pair(n, eps, cfg.instance_seed);
            reference = pair.null_spec;
            source_spec = cfg.far ? pair.perturbed_spec : pair.null_spec;
        } else {
            throw ConfigInvalid("family " + cfg.family + " not usable with product_identity");
        }
        ProductIdentityOptions opts;
        if (cfg.constant > 0.0) opts.constant = cfg.constant;
        if (m_override > 0)
            opts.constant = static_cast<double>(m_override) * eps * eps /
                            std::sqrt(static_cast<double>(n));
        ex.nominal_m = product_identity_sample_size(n, eps, opts.constant);
        const FlipNormalization fn = flip_normalize(reference);
        ex.run = [=](std::uint64_t trial_seed) {
            ProductSource raw(source_spec, src_seed(trial_seed, 1));
            FlippedSource source(raw, fn.flip_mask);
            ProductIdentityOptions o = opts;
            o.seed = src_seed(trial_seed, 2);
            return product_identity_test(fn.q, source, eps, o);
        };
        return ex;
    }

    if (cfg.tester == "product_closeness") {
        if (cfg.family != "closeness_pair")
            throw ConfigInvalid("family " + cfg.family + " not usable with product_closeness");
        const auto pair = gen_closeness_pair(n, cfg.k, eps, cfg.instance_seed, cfg.far);
        ProductClosenessOptions opts;
        if (cfg.constant > 0.0) opts.constant = cfg.constant;
        if (m_override > 0) {
            const double nn = static_cast<double>(n);
            opts.constant = static_cast<double>(m_override) /
                            std::max(std::sqrt(nn) / (eps * eps), std::pow(nn, 0.75) / eps);
        }
        ex.nominal_m = product_closeness_sample_size(n, eps, opts.constant);
        ex.run = [=](std::uint64_t trial_seed) {
            ProductSource sp(pair.p, src_seed(trial_seed, 1));
            ProductSource sq(pair.q, src_seed(trial_seed, 2));
            ProductClosenessOptions o = opts;
            o.seed = src_seed(trial_seed, 3);
            return product_closeness_test(sp, sq, eps, n, o);
        };
        return ex;
    }

    // Net-based testers share the tree / fork instances.
    BayesNet reference;
    BayesNet alternative;
    if (cfg.family == "balanced_tree") {
        reference = gen_balanced_tree_net(n, cfg.c, cfg.gap, cfg.instance_seed);
        alternative = perturb_net(reference, cfg.delta, cfg.instance_seed, cfg.c / 2.0);
    } else if (cfg.family == "fork_tree") {
        reference = make_fork_tree_net(n);
        alternative = make_wrong_v_net(n);
    } else if (cfg.family == "tree_matching") {
        reference = gen_tree_matching_net(n, eps, cfg.instance_seed).net;
        alternative = gen_tree_matching_net(n, eps, cfg.instance_seed + 1).net;
    } else {
        throw ConfigInvalid("family " + cfg.family + " not usable with tester " + cfg.tester);
    }
    const BayesNet& src_net = cfg.far ? alternative : reference;

    BnTesterOptions bn_opts;
    bn_opts.alpha = cfg.alpha;
    bn_opts.beta = cfg.beta;
    if (m_override > 0)
        bn_opts.alpha = static_cast<double>(m_override) * eps * eps /
                        (std::pow(2.0, 0.5 * reference.max_in_degree()) *
                         std::sqrt(static_cast<double>(n)));

    double gamma = cfg.gamma;
    if (gamma <= 0.0 && n <= kEnumerationCap) {
        const auto audit = nondegeneracy_interval(reference, cfg.d);
        gamma = audit.gamma_lower;
    }

    if (cfg.tester == "bn_identity_known") {
        ex.nominal_m = bn_sample_size(n, reference.max_in_degree(), eps, bn_opts.alpha);
        ex.run = [=](std::uint64_t trial_seed) {
            BayesNetSource source(src_net, src_seed(trial_seed, 1));
            BnTesterOptions o = bn_opts;
            o.seed = src_seed(trial_seed, 2);
            return bn_identity_known_structure(reference, source, eps, o);
        };
    } else if (cfg.tester == "bn_closeness_known") {
        ex.nominal_m = bn_sample_size(n, reference.max_in_degree(), eps, bn_opts.alpha);
        ex.run = [=](std::uint64_t trial_seed) {
            BayesNetSource sp(reference, src_seed(trial_seed, 1));
            BayesNetSource sq(src_net, src_seed(trial_seed, 2));
            BnTesterOptions o = bn_opts;
            o.seed = src_seed(trial_seed, 3);
            return bn_closeness_known_structure(reference.structure(), sp, sq, eps, o);
        };
    } else if (cfg.tester == "structure") {
        StructureTestOptions so;
        if (cfg.constant > 0.0) so.ci_constant = cfg.constant;
        const double g = gamma;
        const int d = cfg.d;
        const double per_test_fail =
            so.overall_error * std::pow(static_cast<double>(n), -(d + 2.0));
        if (m_override > 0)
            so.ci_constant = static_cast<double>(m_override) * g * g /
                             (std::pow(2.0, d) + std::log(1.0 / per_test_fail));
        ex.nominal_m = ci_sample_count(d, g, per_test_fail, so.ci_constant);
        ex.run = [=](std::uint64_t trial_seed) {
            BayesNetSource source(src_net, src_seed(trial_seed, 1));
            return structure_test(reference.structure(), source, g, d, so);
        };
    } else if (cfg.tester == "bn_identity_unknown") {
        UnknownStructureOptions uo;
        uo.tester = bn_opts;
        if (cfg.constant > 0.0) uo.structure.ci_constant = cfg.constant;
        const double g = gamma;
        const int d = cfg.d;
        ex.nominal_m = bn_sample_size(n, reference.max_in_degree(), eps, bn_opts.alpha);
        ex.run = [=](std::uint64_t trial_seed) {
            BayesNetSource source(src_net, src_seed(trial_seed, 1));
            UnknownStructureOptions o = uo;
            o.tester.seed = src_seed(trial_seed, 2);
            return bn_identity_unknown_structure(reference, source, eps, g, d, o);
        };
    } else if (cfg.tester == "bn_closeness_unknown") {
        UnknownStructureOptions uo;
        uo.tester = bn_opts;
        if (cfg.constant > 0.0) uo.structure.ci_constant = cfg.constant;
        const double g = gamma;
        const int d = cfg.d;
        std::vector<int> ordering(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) ordering[static_cast<std::size_t>(i)] = i;
        ex.nominal_m = bn_sample_size(n, reference.max_in_degree(), eps, bn_opts.alpha);
        ex.run = [=](std::uint64_t trial_seed) {
            BayesNetSource sp(reference, src_seed(trial_seed, 1));
            BayesNetSource sq(src_net, src_seed(trial_seed, 2));
            UnknownStructureOptions o = uo;
            o.tester.seed = src_seed(trial_seed, 3);
            return bn_closeness_unknown_structure(ordering, sp, sq, eps, g, d, o);
        };
    } else {
        throw ConfigInvalid("unknown tester " + cfg.tester);
    }
    return ex;
}

inline SweepPoint run_point(const PreparedExperiment& ex, int trials, std::uint64_t base_seed,
                            int threads) {
    SweepPoint pt;
    pt.family = ex.family;
    pt.tester = ex.tester;
    pt.n = ex.n;
    pt.eps = ex.eps;
    pt.m = ex.nominal_m;
    pt.trials = trials;
    pt.seed = base_seed;

    struct Outcome {
        int kind = 2; // 0 accept, 1 reject, 2 error
        std::uint64_t samples = 0;
    };
    std::vector<Outcome> results(static_cast<std::size_t>(trials));
    std::atomic<int> next{0};
    auto worker = [&] {
        for (;;) {
            const int t = next.fetch_add(1);
            if (t >= trials) return;
            try {
                const Verdict v = ex.run(base_seed + static_cast<std::uint64_t>(t));
                results[static_cast<std::size_t>(t)] = {v.accepted() ? 0 : 1, v.samples_used};
            } catch (const std::exception&) {
                results[static_cast<std::size_t>(t)] = {2, 0};
            }
        }
    };
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(threads));
        for (int w = 0; w < threads; ++w) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }

    double total_samples = 0.0;
    for (const auto& r : results) {
        if (r.kind == 0) ++pt.accepts;
        else if (r.kind == 1) ++pt.rejects;
        else ++pt.errors;
        total_samples += static_cast<double>(r.samples);
    }
    const std::uint64_t decided = pt.accepts + pt.rejects;
    pt.mean_samples = decided || pt.errors ? total_samples / static_cast<double>(trials) : 0.0;
    pt.accept_rate = wilson_interval(pt.accepts, decided);
    return pt;
}

inline ErrorRateReport run_trials(const ExperimentConfig& cfg) {
    ErrorRateReport rep;
    std::vector<int> ns = cfg.sweep_n.empty() ? std::vector<int>{cfg.n} : cfg.sweep_n;
    std::vector<double> epss = cfg.sweep_eps.empty() ? std::vector<double>{cfg.eps} : cfg.sweep_eps;
    for (int n : ns)
        for (double eps : epss) {
            const auto ex = prepare_experiment(cfg, n, eps, 0);
            rep.rows.push_back(run_point(ex, cfg.trials, cfg.seed, cfg.threads));
        }
    return rep;
}

// For every m on the axis, one null row and one alternative row, so the table
// reads m -> (null accept rate, alt reject rate).
inline ErrorRateReport sweep_sample_complexity(const ExperimentConfig& cfg) {
    if (cfg.sweep_m.empty()) throw ConfigInvalid("sweep needs a sweep_m axis");
    ErrorRateReport rep;
    for (std::uint64_t m : cfg.sweep_m)
        for (bool far : {false, true}) {
            ExperimentConfig point = cfg;
            point.far = far;
            const auto ex = prepare_experiment(point, cfg.n, cfg.eps, m);
            rep.rows.push_back(run_point(ex, cfg.trials, cfg.seed, cfg.threads));
        }
    return rep;
}

} // namespace bnprop
