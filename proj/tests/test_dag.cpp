#include <catch2/catch.hpp>

#include "bnprop/dag.hpp"

using namespace bnprop;

TEST_CASE("two-node chain validates with d = 1") {
    const DagStructure s = validate_structure({{}, {0}});
    REQUIRE(s.n == 2);
    REQUIRE(s.max_in_degree == 1);
    REQUIRE(s.parents[1] == std::vector<int>{0});
    REQUIRE(s.relabel == std::vector<int>{0, 1});
}

TEST_CASE("a 2-cycle is rejected") {
    REQUIRE_THROWS_AS(validate_structure({{1}, {0}}), CycleDetected);
    REQUIRE_THROWS_AS(validate_structure({{0}}), CycleDetected);
}

TEST_CASE("collider has d = 2") {
    const DagStructure s = validate_structure({{}, {}, {0, 1}});
    REQUIRE(s.max_in_degree == 2);
    REQUIRE(s.parents[2] == std::vector<int>{0, 1});
}

TEST_CASE("out-of-range parent index is rejected") {
    REQUIRE_THROWS_AS(validate_structure({{}, {5}}), ParentIndexOutOfRange);
    REQUIRE_THROWS_AS(validate_structure({{}, {-1}}), ParentIndexOutOfRange);
}

TEST_CASE("non-topological input is relabeled so edges go low to high") {
    // Node 1's parent is node 2; validation renumbers.
    const DagStructure s = validate_structure({{}, {2}, {}});
    REQUIRE(s.n == 3);
    for (int i = 0; i < s.n; ++i)
        for (int p : s.parents[i]) REQUIRE(p < i);
    REQUIRE(s.edge_count() == 1);
    // Original node 2 must come before original node 1.
    REQUIRE(s.relabel[2] < s.relabel[1]);
}

TEST_CASE("skeleton helpers") {
    const DagStructure s = validate_structure({{}, {0}, {0}, {2}});
    REQUIRE(s.is_parent(0, 1));
    REQUIRE_FALSE(s.is_parent(1, 0));
    REQUIRE(s.skeleton_edge(2, 0));
    REQUIRE(s.children(0) == std::vector<int>{1, 2});
    REQUIRE(s.skeleton_edges() ==
            std::vector<std::pair<int, int>>{{0, 1}, {0, 2}, {2, 3}});
}

TEST_CASE("dependence conditions on a path") {
    // 0 -> 1 -> 2.
    const DagStructure s = validate_structure({{}, {0}, {1}});
    REQUIRE(matches_dependence_condition(s, 0, 1, {}));      // (i)
    REQUIRE(matches_dependence_condition(s, 0, 1, {2}));     // (i), set irrelevant
    REQUIRE(matches_dependence_condition(s, 0, 2, {}));      // (iii), middle node free
    REQUIRE_FALSE(matches_dependence_condition(s, 0, 2, {1})); // middle node blocks
}

TEST_CASE("dependence conditions on a fork and a collider") {
    const DagStructure fork = validate_structure({{}, {0}, {0}});
    REQUIRE(matches_dependence_condition(fork, 1, 2, {}));      // (iv)
    REQUIRE_FALSE(matches_dependence_condition(fork, 1, 2, {0})); // parent observed

    const DagStructure collider = validate_structure({{}, {}, {0, 1}});
    REQUIRE_FALSE(matches_dependence_condition(collider, 0, 1, {}));
    REQUIRE(matches_dependence_condition(collider, 0, 1, {2})); // (ii)
}
