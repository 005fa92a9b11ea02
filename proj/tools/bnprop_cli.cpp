// Command-line front end: instance generation, single verdicts, Monte-Carlo
// trial reports, sample-complexity sweeps, and instance audits.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "bnprop/bn_testers.hpp"
#include "bnprop/exact.hpp"
#include "bnprop/hard_instances.hpp"
#include "bnprop/harness.hpp"
#include "bnprop/json_io.hpp"
#include "bnprop/learner.hpp"
#include "bnprop/product_testers.hpp"
#include "bnprop/structure.hpp"

using nlohmann::json;
using namespace bnprop;

namespace {

json load_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigInvalid("cannot open " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ConfigInvalid(std::string("bad json in ") + path + ": " + e.what());
    }
    return j;
}

void emit(const std::string& out_path, const std::string& text) {
    if (out_path.empty() || out_path == "-") {
        std::cout << text;
        if (text.empty() || text.back() != '\n') std::cout << '\n';
        return;
    }
    std::ofstream out(out_path, std::ios::binary);
    if (!out) throw ConfigInvalid("cannot write " + out_path);
    out << text;
}

// A sample source described on the command line: a net json, a product json,
// or a recorded batch file.
struct SourceSpec {
    std::string net_path, product_path, batch_path;

    std::unique_ptr<SampleSource> open(std::uint64_t seed, SampleBatch& scratch) const {
        const int given = !net_path.empty() + !product_path.empty() + !batch_path.empty();
        if (given != 1) throw ConfigInvalid("give exactly one of net/product/batch per source");
        if (!net_path.empty())
            return std::make_unique<BayesNetSource>(bayes_net_from_json(load_json(net_path)), seed);
        if (!product_path.empty())
            return std::make_unique<ProductSource>(product_from_json(load_json(product_path)), seed);
        std::ifstream in(batch_path);
        if (!in) throw ConfigInvalid("cannot open " + batch_path);
        scratch = SampleBatch::read(in);
        return std::make_unique<BatchSource>(scratch);
    }
};

int cmd_gen(const std::string& family, int n, double eps, int k, int d, std::uint64_t seed,
            bool far, double c, double gap, const std::string& out) {
    json env;
    env["family"] = family;
    env["seed"] = seed;
    json params{{"n", n}, {"eps", eps}};
    if (family == "uniformity_no") {
        const auto inst = gen_product_uniformity_no(n, eps, seed);
        env["instance"] = to_json(inst.spec);
        if (inst.outside_proof_regime) env["outside_proof_regime"] = true;
    } else if (family == "unbalanced_pair") {
        const auto inst = gen_unbalanced_identity_pair(n, eps, seed);
        env["instance"] = {{"null", to_json(inst.null_spec)}, {"perturbed", to_json(inst.perturbed_spec)}};
        if (inst.outside_proof_regime) env["outside_proof_regime"] = true;
    } else if (family == "closeness_pair") {
        params["k"] = k;
        params["far"] = far;
        const auto inst = gen_closeness_pair(n, k, eps, seed, far);
        env["instance"] = {{"p", to_json(inst.p)}, {"q", to_json(inst.q)}};
        if (inst.outside_proof_regime) env["outside_proof_regime"] = true;
    } else if (family == "tree_matching") {
        const auto inst = gen_tree_matching_net(n, eps, seed);
        json pairs = json::array();
        for (std::size_t p = 0; p < inst.matching.pairs.size(); ++p)
            pairs.push_back({{"i", inst.matching.pairs[p].first},
                             {"j", inst.matching.pairs[p].second},
                             {"negative", static_cast<bool>(inst.matching.orientations[p])}});
        env["instance"] = to_json(inst.net);
        env["matching"] = std::move(pairs);
        env["delta"] = inst.delta;
    } else if (family == "balanced_tree") {
        params["c"] = c;
        params["gap"] = gap;
        env["instance"] = to_json(gen_balanced_tree_net(n, c, gap, seed));
    } else if (family == "pointer_mixture") {
        // d pointer bits over uniform leaves except leaf 0 biased to eps.
        params["d"] = d;
        std::vector<ProductSpec> leaves(std::size_t{1} << d);
        for (auto& leaf : leaves) leaf.means.assign(static_cast<std::size_t>(n), 0.5);
        for (auto& m : leaves[0].means) m = eps;
        env["instance"] = to_json(gen_pointer_mixture(d, leaves));
    } else {
        throw ConfigInvalid("unknown family " + family);
    }
    env["params"] = std::move(params);
    emit(out, env.dump(2));
    return 0;
}

int cmd_test(const std::string& tester, const std::string& reference, const SourceSpec& s1,
             const SourceSpec& s2, double eps, double gamma, int d, std::uint64_t seed,
             double constant, const std::string& out) {
    SampleBatch scratch1, scratch2;
    Verdict v;
    if (tester == "product_identity") {
        const auto q = product_from_json(load_json(reference));
        const auto fn = flip_normalize(q);
        auto raw = s1.open(mix_seed(seed, 1), scratch1);
        FlippedSource source(*raw, fn.flip_mask);
        ProductIdentityOptions opts;
        if (constant > 0.0) opts.constant = constant;
        opts.seed = mix_seed(seed, 2);
        v = product_identity_test(fn.q, source, eps, opts);
    } else if (tester == "product_closeness") {
        auto sp = s1.open(mix_seed(seed, 1), scratch1);
        auto sq = s2.open(mix_seed(seed, 2), scratch2);
        ProductClosenessOptions opts;
        if (constant > 0.0) opts.constant = constant;
        opts.seed = mix_seed(seed, 3);
        v = product_closeness_test(*sp, *sq, eps, sp->n(), opts);
    } else if (tester == "bn_identity_known") {
        const auto q = bayes_net_from_json(load_json(reference));
        auto source = s1.open(mix_seed(seed, 1), scratch1);
        BnTesterOptions opts;
        opts.seed = mix_seed(seed, 2);
        if (constant > 0.0) opts.alpha = constant;
        v = bn_identity_known_structure(q, *source, eps, opts);
    } else if (tester == "bn_closeness_known") {
        const auto s = structure_from_json(load_json(reference));
        auto sp = s1.open(mix_seed(seed, 1), scratch1);
        auto sq = s2.open(mix_seed(seed, 2), scratch2);
        BnTesterOptions opts;
        opts.seed = mix_seed(seed, 3);
        if (constant > 0.0) opts.alpha = constant;
        v = bn_closeness_known_structure(s, *sp, *sq, eps, opts);
    } else if (tester == "structure") {
        const auto s = structure_from_json(load_json(reference));
        auto source = s1.open(mix_seed(seed, 1), scratch1);
        StructureTestOptions opts;
        if (constant > 0.0) opts.ci_constant = constant;
        v = structure_test(s, *source, gamma, d, opts);
    } else if (tester == "bn_identity_unknown") {
        const auto q = bayes_net_from_json(load_json(reference));
        auto source = s1.open(mix_seed(seed, 1), scratch1);
        UnknownStructureOptions opts;
        opts.tester.seed = mix_seed(seed, 2);
        v = bn_identity_unknown_structure(q, *source, eps, gamma, d, opts);
    } else if (tester == "bn_closeness_unknown") {
        auto sp = s1.open(mix_seed(seed, 1), scratch1);
        auto sq = s2.open(mix_seed(seed, 2), scratch2);
        std::vector<int> ordering(static_cast<std::size_t>(sp->n()));
        for (int i = 0; i < sp->n(); ++i) ordering[static_cast<std::size_t>(i)] = i;
        UnknownStructureOptions opts;
        opts.tester.seed = mix_seed(seed, 3);
        v = bn_closeness_unknown_structure(ordering, *sp, *sq, eps, gamma, d, opts);
    } else {
        throw ConfigInvalid("unknown tester " + tester);
    }
    emit(out, to_json(v).dump(2));
    return 0;
}

int cmd_sample(const SourceSpec& src, std::uint64_t m, std::uint64_t seed, const std::string& out) {
    SampleBatch scratch;
    auto source = src.open(seed, scratch);
    SampleBatch batch(source->n(), seed);
    for (std::uint64_t t = 0; t < m; ++t) batch.push_row(source->next());
    std::ostringstream os;
    batch.write(os);
    emit(out, os.str());
    return 0;
}

int cmd_audit(const std::string& net_path, int d, const std::string& out) {
    const BayesNet net = bayes_net_from_json(load_json(net_path));
    const auto bal = balancedness(net);
    json j;
    j["balancedness"] = {{"c", bal.c}, {"C", bal.C}};
    if (net.n() <= kEnumerationCap) {
        const auto audit = nondegeneracy_interval(net, d);
        json triples = json::array();
        for (const auto& t : audit.triples)
            triples.push_back({{"i", t.i},
                               {"j", t.j},
                               {"S", t.cond},
                               {"beta", t.beta},
                               {"interval", {t.lo, t.hi}}});
        j["nondegeneracy"] = {{"gamma_lower", audit.gamma_lower}, {"triples", std::move(triples)}};
        j["tree_gamma"] = tree_nondegeneracy(net);
    }
    emit(out, j.dump(2));
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Property testers for product distributions and Bayes nets"};
    app.require_subcommand(1);

    std::string family = "uniformity_no", out, reference, config_path, tester = "product_identity";
    std::string net_path;
    SourceSpec src1, src2;
    int n = 10, k = 4, d = 1, threads = 1;
    double eps = 0.3, gamma = 0.1, c = 0.3, gap = 0.25, constant = 0.0;
    std::uint64_t seed = 1;
    bool far = false, as_json = false;
    std::optional<std::uint64_t> seed_override;

    auto* gen = app.add_subcommand("gen", "emit an instance as JSON");
    gen->add_option("--family", family, "instance family")->required();
    gen->add_option("--n", n);
    gen->add_option("--eps", eps);
    gen->add_option("--k", k);
    gen->add_option("--d", d);
    gen->add_option("--seed", seed);
    gen->add_flag("--far", far);
    gen->add_option("--c", c);
    gen->add_option("--gap", gap);
    gen->add_option("--out", out);

    auto* test = app.add_subcommand("test", "run one tester invocation");
    test->add_option("--tester", tester)->required();
    test->add_option("--reference", reference, "reference net/product/structure json");
    test->add_option("--source-net", src1.net_path);
    test->add_option("--source-product", src1.product_path);
    test->add_option("--source-batch", src1.batch_path);
    test->add_option("--source2-net", src2.net_path);
    test->add_option("--source2-product", src2.product_path);
    test->add_option("--source2-batch", src2.batch_path);
    test->add_option("--eps", eps);
    test->add_option("--gamma", gamma);
    test->add_option("--d", d);
    test->add_option("--seed", seed);
    test->add_option("--constant", constant);
    test->add_option("--out", out);

    auto* trials = app.add_subcommand("trials", "Monte-Carlo accept/reject rates");
    trials->add_option("--config", config_path)->required();
    trials->add_option("--out", out);
    trials->add_option("--threads", threads);
    trials->add_option("--seed", seed_override, "override the config seed");
    trials->add_flag("--json", as_json, "emit json instead of csv");

    auto* sweep = app.add_subcommand("sweep", "sample-complexity sweep over sweep_m");
    sweep->add_option("--config", config_path)->required();
    sweep->add_option("--out", out);
    sweep->add_option("--threads", threads);
    sweep->add_option("--seed", seed_override);
    sweep->add_flag("--json", as_json);

    std::uint64_t sample_m = 1000;
    auto* samp = app.add_subcommand("sample", "record a sample batch to the m/n/seed text format");
    samp->add_option("--net", src1.net_path);
    samp->add_option("--product", src1.product_path);
    samp->add_option("--m", sample_m);
    samp->add_option("--seed", seed);
    samp->add_option("--out", out);

    auto* audit = app.add_subcommand("audit", "balancedness / non-degeneracy report");
    audit->add_option("--net", net_path)->required();
    audit->add_option("--d", d);
    audit->add_option("--out", out);

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed()) return cmd_gen(family, n, eps, k, d, seed, far, c, gap, out);
        if (test->parsed())
            return cmd_test(tester, reference, src1, src2, eps, gamma, d, seed, constant, out);
        if (samp->parsed()) return cmd_sample(src1, sample_m, seed, out);
        if (audit->parsed()) return cmd_audit(net_path, d, out);

        ExperimentConfig cfg = ExperimentConfig::from_json(load_json(config_path));
        if (threads > 1) cfg.threads = threads;
        if (seed_override) cfg.seed = *seed_override;
        const ErrorRateReport rep =
            trials->parsed() ? run_trials(cfg) : sweep_sample_complexity(cfg);
        emit(out, as_json ? rep.to_json().dump(2) : rep.csv());
        return 0;
    } catch (const ConfigInvalid& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
