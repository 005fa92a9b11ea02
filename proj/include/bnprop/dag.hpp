#pragma once

// DAG structure over n binary nodes. After validation, nodes are numbered so
// that every edge points from a smaller to a larger label, and parent lists
// are sorted ascending.

#include <algorithm>
#include <functional>
#include <string>
#include <vector>

#include "bnprop/errors.hpp"

namespace bnprop {

struct DagStructure {
    int n = 0;
    std::vector<std::vector<int>> parents; // parents[i], sorted, all < i
    int max_in_degree = 0;
    // relabel[original] = topological label; identity when no relabeling was needed.
    std::vector<int> relabel;

    bool operator==(const DagStructure& o) const { return n == o.n && parents == o.parents; }

    int children_count(int i) const {
        int c = 0;
        for (int j = 0; j < n; ++j)
            for (int p : parents[j])
                if (p == i) ++c;
        return c;
    }

    bool is_parent(int i, int j) const { // i -> j ?
        const auto& ps = parents[j];
        return std::find(ps.begin(), ps.end(), i) != ps.end();
    }

    std::vector<int> children(int i) const {
        std::vector<int> out;
        for (int j = 0; j < n; ++j)
            if (is_parent(i, j)) out.push_back(j);
        return out;
    }

    bool skeleton_edge(int i, int j) const { return is_parent(i, j) || is_parent(j, i); }

    int edge_count() const {
        int e = 0;
        for (const auto& ps : parents) e += static_cast<int>(ps.size());
        return e;
    }

    std::vector<std::pair<int, int>> skeleton_edges() const {
        std::vector<std::pair<int, int>> out;
        for (int j = 0; j < n; ++j)
            for (int p : parents[j]) out.emplace_back(std::min(p, j), std::max(p, j));
        std::sort(out.begin(), out.end());
        return out;
    }
};

// Validates parent lists, relabels into a topological numbering if needed.
// Throws CycleDetected / ParentIndexOutOfRange.
inline DagStructure validate_structure(const std::vector<std::vector<int>>& raw_parents) {
    const int n = static_cast<int>(raw_parents.size());
    for (int i = 0; i < n; ++i)
        for (int p : raw_parents[i]) {
            if (p < 0 || p >= n)
                throw ParentIndexOutOfRange("node " + std::to_string(i) + " has parent " + std::to_string(p));
            if (p == i) throw CycleDetected("self-loop at node " + std::to_string(i));
        }

    // Kahn's algorithm; also yields the relabeling when edges do not already
    // point from smaller to larger index.
    std::vector<int> indeg(n, 0);
    std::vector<std::vector<int>> children(n);
    for (int i = 0; i < n; ++i) {
        indeg[i] = static_cast<int>(raw_parents[i].size());
        for (int p : raw_parents[i]) children[p].push_back(i);
    }
    std::vector<int> order;
    order.reserve(n);
    std::vector<int> ready;
    for (int i = n - 1; i >= 0; --i)
        if (indeg[i] == 0) ready.push_back(i);
    while (!ready.empty()) {
        // Pop the smallest ready node so already-topological inputs keep their labels.
        std::sort(ready.begin(), ready.end(), std::greater<>());
        int u = ready.back();
        ready.pop_back();
        order.push_back(u);
        for (int c : children[u])
            if (--indeg[c] == 0) ready.push_back(c);
    }
    if (static_cast<int>(order.size()) != n) throw CycleDetected("parent lists contain a directed cycle");

    DagStructure s;
    s.n = n;
    s.relabel.assign(n, 0);
    for (int pos = 0; pos < n; ++pos) s.relabel[order[pos]] = pos;
    s.parents.assign(n, {});
    for (int i = 0; i < n; ++i) {
        auto& ps = s.parents[s.relabel[i]];
        for (int p : raw_parents[i]) ps.push_back(s.relabel[p]);
        std::sort(ps.begin(), ps.end());
        if (!ps.empty() && ps.back() >= s.relabel[i])
            throw CycleDetected("internal: topological order violated"); // unreachable
        s.max_in_degree = std::max(s.max_in_degree, static_cast<int>(ps.size()));
    }
    return s;
}

inline DagStructure empty_structure(int n) {
    return validate_structure(std::vector<std::vector<int>>(static_cast<std::size_t>(n)));
}

// Conditions (i)-(iv) that make the pair {i,j} conditionally dependent under a
// structure, symmetrized over the pair:
//   (i)   one is a parent of the other;
//   (ii)  the conditioning set contains a common child;
//   (iii) one is a grandparent of the other through a middle node outside the set;
//   (iv)  they share a parent outside the set.
inline bool matches_dependence_condition(const DagStructure& s, int i, int j,
                                         const std::vector<int>& cond) {
    auto contains = [&](int k) { return std::find(cond.begin(), cond.end(), k) != cond.end(); };
    if (s.is_parent(i, j) || s.is_parent(j, i)) return true; // (i)
    for (int k : cond)
        if (s.is_parent(i, k) && s.is_parent(j, k)) return true; // (ii)
    for (int k = 0; k < s.n; ++k) {                              // (iii), both directions
        if (k == i || k == j || contains(k)) continue;
        if (s.is_parent(i, k) && s.is_parent(k, j)) return true;
        if (s.is_parent(j, k) && s.is_parent(k, i)) return true;
    }
    for (int k = 0; k < s.n; ++k) { // (iv)
        if (k == i || k == j || contains(k)) continue;
        if (s.is_parent(k, i) && s.is_parent(k, j)) return true;
    }
    return false;
}

// Visits every subset of [n] \ {skip_a, skip_b} of size at most max_size.
template <typename Visit>
inline void for_each_subset_up_to(int n, int skip_a, int skip_b, int max_size, Visit&& visit) {
    std::vector<int> pool;
    for (int k = 0; k < n; ++k)
        if (k != skip_a && k != skip_b) pool.push_back(k);
    std::vector<int> subset;
    std::function<void(std::size_t)> rec = [&](std::size_t start) {
        visit(subset);
        if (static_cast<int>(subset.size()) == max_size) return;
        for (std::size_t t = start; t < pool.size(); ++t) {
            subset.push_back(pool[t]);
            rec(t + 1);
            subset.pop_back();
        }
    };
    rec(0);
}

} // namespace bnprop
