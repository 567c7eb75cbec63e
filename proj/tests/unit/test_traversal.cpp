// SPDX-License-Identifier: Apache-2.0
#include "fixtures.hpp"

#include "heart/annotator.hpp"
#include "heart/decomposition.hpp"
#include "heart/error.hpp"
#include "heart/schema.hpp"
#include "heart/traversal.hpp"

#include <doctest.h>

using namespace heart;
using heart::testing::make_tree;
using heart::testing::make_weights;

namespace {

struct Expected {
    std::vector<std::string> visited;
    std::map<std::string, CutReason> cuts;
    std::set<std::string> terminals;
};

void check_trace(const ReasoningTrace& t, const Expected& e) {
    CHECK(t.visited == e.visited);
    CHECK(t.cut_nodes == e.cuts);
    CHECK(t.terminal_nodes == e.terminals);
    for (const auto& p : t.paths) {
        CHECK(p.front() == "r");
        CHECK(e.terminals.count(p.back()));
    }
}

ReasoningTree tree_of(const std::string& name) {
    RuleAnnotator rule;
    const auto nl = heart::testing::load_circuit(name);
    return build_tree(decompose(nl, {}, rule).subcircuits, nl, rule);
}

}  // namespace

TEST_CASE("branch cut cases") {
    const auto tree = make_tree({{"r", ""}, {"a", "r"}, {"b", "r"}, {"c", "r"}});
    const TraversalConfig cfg;  // tau 0.3, epsilon 0.05
    const auto& root = tree.node("r");
    SUBCASE("all weak") {
        CHECK(branch_cut(root, make_weights(tree, {{"a", 0.1}, {"b", 0.2}, {"c", 0.29}}), cfg) ==
              BranchDecision::cut(CutReason::AllWeak));
    }
    SUBCASE("no dominant") {
        CHECK(branch_cut(root, make_weights(tree, {{"a", 0.6}, {"b", 0.62}, {"c", 0.58}}), cfg) ==
              BranchDecision::cut(CutReason::NoDominant));
    }
    SUBCASE("expand") {
        CHECK(branch_cut(root, make_weights(tree, {{"a", 0.9}, {"b", 0.1}, {"c", 0.5}}), cfg) == BranchDecision::admit());
    }
    SUBCASE("single child") {
        const auto chain = make_tree({{"r", ""}, {"a", "r"}});
        CHECK(branch_cut(chain.node("r"), make_weights(chain, {{"a", 0.3}}), cfg) == BranchDecision::admit());
        CHECK(branch_cut(chain.node("r"), make_weights(chain, {{"a", 0.2}}), cfg) ==
              BranchDecision::cut(CutReason::AllWeak));
    }
    SUBCASE("leaf") {
        CHECK_THROWS_AS(branch_cut(tree.node("a"), make_weights(tree, {{"a", 1.0}, {"b", 0.0}, {"c", 0.0}}), cfg), Error);
    }
    SUBCASE("missing weight") {
        CHECK_THROWS_AS(branch_cut(root, make_weights(tree, {{"a", 0.9}, {"b", 0.1}}), cfg), Error);
    }
}

TEST_CASE("hand-built tree 1: dominant branch expands fully") {
    const auto tree = make_tree({{"r", ""}, {"a", "r"}, {"b", "r"}, {"a1", "a"}, {"a2", "a"}});
    const auto w = make_weights(tree, {{"a", 0.9}, {"b", 0.2}, {"a1", 0.8}, {"a2", 0.1}});
    const auto t = traverse_with_weights(tree, "q", w, {});
    check_trace(t, {{"r", "a", "b", "a1", "a2"}, {}, {"b", "a1", "a2"}});
    CHECK(t.paths == std::vector<std::vector<std::string>>{{"r", "b"}, {"r", "a", "a1"}, {"r", "a", "a2"}});
    CHECK(primary_terminal(t, tree) == "a1");
}

TEST_CASE("hand-built tree 2: weak root") {
    const auto tree = make_tree({{"r", ""}, {"a", "r"}, {"b", "r"}, {"c", "r"}});
    const auto w = make_weights(tree, {{"a", 0.1}, {"b", 0.2}, {"c", 0.25}});
    const auto t = traverse_with_weights(tree, "q", w, {});
    check_trace(t, {{"r"}, {{"r", CutReason::AllWeak}}, {"r"}});
    CHECK(t.scoped_subtrees.at("r").size() == 4);
    CHECK(t.terminal_weight("r") == 1.0);
}

TEST_CASE("hand-built tree 3: undecided middle level") {
    const auto tree =
        make_tree({{"r", ""}, {"a", "r"}, {"b", "r"}, {"a1", "a"}, {"a2", "a"}, {"a3", "a"}, {"b1", "b"}});
    const auto w = make_weights(tree, {{"a", 0.7}, {"b", 0.4}, {"a1", 0.5}, {"a2", 0.52}, {"a3", 0.48}, {"b1", 0.2}});
    const auto t = traverse_with_weights(tree, "q", w, {});
    check_trace(t, {{"r", "a", "b"}, {{"a", CutReason::NoDominant}, {"b", CutReason::AllWeak}}, {"a", "b"}});
    CHECK(t.scoped_subtrees.at("a") == std::vector<std::string>{"a", "a1", "a2", "a3"});
    CHECK(primary_terminal(t, tree) == "a");
}

TEST_CASE("hand-built tree 4: admitted single child and a deep cut") {
    const auto tree = make_tree({{"r", ""}, {"x", "r"}, {"y", "x"}, {"z", "x"}, {"y1", "y"}, {"y2", "y"}});
    const auto w = make_weights(tree, {{"x", 0.35}, {"y", 0.9}, {"z", 0.6}, {"y1", 0.3}, {"y2", 0.29}});
    const auto t = traverse_with_weights(tree, "q", w, {});
    check_trace(t, {{"r", "x", "y", "z"}, {{"y", CutReason::NoDominant}}, {"y", "z"}});
    CHECK(t.paths == std::vector<std::vector<std::string>>{{"r", "x", "y"}, {"r", "x", "z"}});
}

TEST_CASE("hand-built tree 5: thresholds are inclusive") {
    const auto tree =
        make_tree({{"r", ""}, {"a", "r"}, {"b", "r"}, {"a1", "a"}, {"a2", "a"}, {"b1", "b"}, {"b2", "b"}});
    const auto w =
        make_weights(tree, {{"a", 0.75}, {"b", 0.5}, {"a1", 0.5}, {"a2", 0.25}, {"b1", 0.25}, {"b2", 0.125}});
    TraversalConfig cfg;
    cfg.tau_stop = 0.5;
    cfg.epsilon = 0.25;
    const auto t = traverse_with_weights(tree, "q", w, cfg);
    check_trace(t, {{"r", "a", "b", "a1", "a2"}, {{"b", CutReason::AllWeak}}, {"b", "a1", "a2"}});
}

TEST_CASE("config validation") {
    TraversalConfig cfg;
    cfg.tau_stop = 1.5;
    CHECK_THROWS_AS(cfg.validate(), Error);
    cfg.tau_stop = 0.3;
    cfg.epsilon = -0.1;
    CHECK_THROWS_AS(cfg.validate(), Error);
}

TEST_CASE("weights are validated against the tree") {
    const auto tree = make_tree({{"r", ""}, {"a", "r"}, {"b", "r"}});
    auto w = make_weights(tree, {{"a", 0.9}, {"b", 1.2}});
    CHECK_THROWS_AS(traverse_with_weights(tree, "q", w, {}), Error);
    w = make_weights(tree, {{"a", 0.9}, {"b", 0.2}});
    w.rationales.clear();
    CHECK_THROWS_AS(traverse_with_weights(tree, "q", w, {}), Error);
}

TEST_CASE("rule annotator traversal is deterministic") {
    const auto tree = tree_of("afe_s2");
    RuleAnnotator rule;
    const auto first = to_json(traverse(tree, "reduce noise and area", rule, {}));
    for (int i = 0; i < 10; ++i) CHECK(to_json(traverse(tree, "reduce noise and area", rule, {})) == first);
    CHECK(check_document("trace", first).valid);
    CHECK(to_json(trace_from_json(first)) == first);
}

TEST_CASE("noise query scopes the input stage") {
    const auto tree = tree_of("afe_s2");
    RuleAnnotator rule;
    const auto trace = traverse(tree, "reduce noise and area", rule, {});
    CHECK(primary_terminal(trace, tree) == "dc_0");
    const auto scope = scope_design_variables(trace, tree, tree.source_netlist);
    CHECK(scope.scoped_devices == std::vector<std::string>{"M1", "M2", "M3", "M4", "M5"});
    CHECK(scope.variables.size() == 10);
    for (const auto& v : scope.variables) {
        CHECK(v.lower == doctest::Approx(v.reference / 4.0));
        CHECK(v.upper == doctest::Approx(v.reference * 4.0));
    }
    CHECK(scope.frozen.count("M6.W"));
    CHECK(scope.frozen.count("Cc.C"));
}

TEST_CASE("explicit scope nodes") {
    const auto tree = tree_of("bench12");
    RuleAnnotator rule;
    const auto trace = traverse(tree, "increase gain", rule, {});
    ScopeConfig cfg;
    cfg.terminals = {"root"};
    const auto all = scope_design_variables(trace, tree, tree.source_netlist, cfg);
    CHECK(all.variables.size() == 12);
    CHECK(all.frozen.empty());
    cfg.terminals = {"dc_1"};
    CHECK(scope_design_variables(trace, tree, tree.source_netlist, cfg).variables.size() == 4);
    cfg.terminals = {"nope"};
    CHECK_THROWS_AS(scope_design_variables(trace, tree, tree.source_netlist, cfg), Error);
}
