#pragma once

// Bayes net over {0,1}^n: DAG structure plus a conditional probability table.
// cpt[i][a] = Pr[X_i = 1 | parents of i take assignment a], where the
// assignment index packs parent bits in ascending parent order (bit k of a is
// the value of the k-th smallest parent).

#include <cstdint>
#include <string>
#include <vector>

#include "bnprop/dag.hpp"
#include "bnprop/errors.hpp"

namespace bnprop {

struct ParentalConfiguration {
    int node = 0;
    std::uint32_t assignment = 0; // packed bits, ascending parent order
};

class BayesNet {
  public:
    BayesNet() = default;
    BayesNet(DagStructure structure, std::vector<std::vector<double>> cpt)
        : structure_(std::move(structure)), cpt_(std::move(cpt)) {
        if (static_cast<int>(cpt_.size()) != structure_.n)
            throw InvalidParameter("cpt has " + std::to_string(cpt_.size()) + " rows for " +
                                   std::to_string(structure_.n) + " nodes");
        for (int i = 0; i < structure_.n; ++i) {
            const std::size_t want = std::size_t{1} << structure_.parents[i].size();
            if (cpt_[i].size() != want)
                throw InvalidParameter("node " + std::to_string(i) + " needs " + std::to_string(want) +
                                       " cpt entries, got " + std::to_string(cpt_[i].size()));
            for (double p : cpt_[i])
                if (!(p >= 0.0 && p <= 1.0))
                    throw InvalidParameter("cpt entry outside [0,1] at node " + std::to_string(i));
        }
    }

    const DagStructure& structure() const { return structure_; }
    int n() const { return structure_.n; }
    int max_in_degree() const { return structure_.max_in_degree; }
    const std::vector<std::vector<double>>& cpt() const { return cpt_; }
    double entry(int node, std::uint32_t assignment) const { return cpt_[node][assignment]; }

    int config_count(int node) const { return 1 << structure_.parents[node].size(); }

    // Assignment of node's parents inside a full state x (bit i of x = X_i).
    std::uint32_t parent_assignment(int node, std::uint64_t x) const {
        std::uint32_t a = 0;
        const auto& ps = structure_.parents[node];
        for (std::size_t k = 0; k < ps.size(); ++k)
            a |= static_cast<std::uint32_t>((x >> ps[k]) & 1u) << k;
        return a;
    }

    // Probability of the full state x under the factorization.
    double state_prob(std::uint64_t x) const {
        double p = 1.0;
        for (int i = 0; i < structure_.n; ++i) {
            const double q = cpt_[i][parent_assignment(i, x)];
            p *= ((x >> i) & 1u) ? q : 1.0 - q;
        }
        return p;
    }

    bool same_structure(const BayesNet& other) const { return structure_ == other.structure(); }

  private:
    DagStructure structure_;
    std::vector<std::vector<double>> cpt_;
};

// Product distribution over {0,1}^n, i.e. the d = 0 special case.
struct ProductSpec {
    std::vector<double> means;

    int n() const { return static_cast<int>(means.size()); }

    void validate() const {
        if (means.empty()) throw InvalidParameter("product spec needs n >= 1");
        for (double m : means)
            if (!(m >= 0.0 && m <= 1.0)) throw InvalidParameter("product mean outside [0,1]");
    }

    BayesNet to_bayes_net() const {
        validate();
        std::vector<std::vector<double>> cpt;
        cpt.reserve(means.size());
        for (double m : means) cpt.push_back({m});
        return BayesNet(empty_structure(n()), std::move(cpt));
    }
};

} // namespace bnprop
