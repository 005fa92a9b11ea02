#pragma once

// JSON schemas for the on-disk interfaces:
//   Bayes net:  {"n": int, "parents": [[int]], "cpt": [{"node", "assignment", "p"}]}
//               with assignment bits ordered by ascending parent index;
//   product:    {"means": [float]};
//   verdict:    {"decision", "statistic", "threshold", "samples_used", "trigger"};
//   skeleton:   {"edges": [[i, j]]};  structure: {"parents": [[int]]}.

#include <string>
#include <vector>

#include <json.hpp>

#include "bnprop/bayes_net.hpp"
#include "bnprop/errors.hpp"
#include "bnprop/structure.hpp"
#include "bnprop/verdict.hpp"

namespace bnprop {

using nlohmann::json;

inline json to_json(const BayesNet& net) {
    json j;
    j["n"] = net.n();
    j["parents"] = net.structure().parents;
    json cpt = json::array();
    for (int i = 0; i < net.n(); ++i) {
        const auto arity = net.structure().parents[i].size();
        for (int a = 0; a < net.config_count(i); ++a) {
            std::string bits(arity, '0');
            for (std::size_t k = 0; k < arity; ++k)
                if ((a >> k) & 1) bits[k] = '1';
            cpt.push_back({{"node", i}, {"assignment", bits}, {"p", net.entry(i, a)}});
        }
    }
    j["cpt"] = std::move(cpt);
    return j;
}

inline BayesNet bayes_net_from_json(const json& j) {
    if (!j.contains("n") || !j.contains("parents") || !j.contains("cpt"))
        throw ConfigInvalid("bayes net json needs n, parents, cpt");
    const auto parents = j.at("parents").get<std::vector<std::vector<int>>>();
    if (static_cast<int>(parents.size()) != j.at("n").get<int>())
        throw ConfigInvalid("parents length disagrees with n");
    DagStructure s = validate_structure(parents);
    std::vector<std::vector<double>> cpt(parents.size());
    std::vector<std::vector<bool>> filled(parents.size());
    for (std::size_t i = 0; i < parents.size(); ++i) {
        cpt[i].assign(std::size_t{1} << s.parents[i].size(), 0.0);
        filled[i].assign(cpt[i].size(), false);
    }
    for (const auto& row : j.at("cpt")) {
        const int node0 = row.at("node").get<int>();
        if (node0 < 0 || node0 >= s.n) throw ConfigInvalid("cpt row names a bad node");
        const int node = s.relabel[static_cast<std::size_t>(node0)];
        const auto bits = row.at("assignment").get<std::string>();
        if (bits.size() != s.parents[node].size())
            throw ConfigInvalid("assignment length disagrees with parent count");
        std::uint32_t a = 0;
        for (std::size_t k = 0; k < bits.size(); ++k) {
            if (bits[k] == '1')
                a |= std::uint32_t{1} << k;
            else if (bits[k] != '0')
                throw ConfigInvalid("assignment must be a bitstring");
        }
        cpt[static_cast<std::size_t>(node)][a] = row.at("p").get<double>();
        filled[static_cast<std::size_t>(node)][a] = true;
    }
    for (std::size_t i = 0; i < filled.size(); ++i)
        for (bool f : filled[i])
            if (!f) throw ConfigInvalid("cpt is missing an entry for node " + std::to_string(i));
    return BayesNet(std::move(s), std::move(cpt));
}

inline json to_json(const ProductSpec& p) { return json{{"means", p.means}}; }

inline ProductSpec product_from_json(const json& j) {
    ProductSpec p;
    p.means = j.at("means").get<std::vector<double>>();
    p.validate();
    return p;
}

inline json to_json(const Verdict& v) {
    json j;
    j["decision"] = v.accepted() ? "accept" : "reject";
    j["statistic"] = v.statistic;
    j["threshold"] = v.threshold;
    j["samples_used"] = v.samples_used;
    j["trigger"] = v.trigger.empty() ? json() : json(v.trigger);
    if (!v.stage.empty()) j["stage"] = v.stage;
    return j;
}

inline json to_json(const SkeletonEdgeSet& s) {
    json edges = json::array();
    for (const auto& [i, j] : s.edges) edges.push_back({i, j});
    return json{{"edges", std::move(edges)}};
}

inline SkeletonEdgeSet skeleton_from_json(const json& j) {
    SkeletonEdgeSet s;
    for (const auto& e : j.at("edges")) {
        if (!e.is_array() || e.size() != 2) throw ConfigInvalid("skeleton edge must be a pair");
        s.edges.emplace_back(e[0].get<int>(), e[1].get<int>());
    }
    s.normalize();
    return s;
}

inline json structure_to_json(const DagStructure& s) { return json{{"parents", s.parents}}; }

inline DagStructure structure_from_json(const json& j) {
    return validate_structure(j.at("parents").get<std::vector<std::vector<int>>>());
}

} // namespace bnprop
