// SPDX-License-Identifier: Apache-2.0
#include "fixtures.hpp"

#include "heart/annotator.hpp"
#include "heart/decomposition.hpp"
#include "heart/error.hpp"
#include "heart/schema.hpp"
#include "heart/tree.hpp"

#include <doctest.h>

#include <algorithm>
#include <set>

using namespace heart;
using heart::testing::load_circuit;

namespace {

ReasoningTree tree_of(const std::string& name) {
    RuleAnnotator rule;
    const auto nl = load_circuit(name);
    return build_tree(decompose(nl, {}, rule).subcircuits, nl, rule);
}

}  // namespace

TEST_CASE("trees over the corpus satisfy the invariants") {
    for (const auto& name : heart::testing::corpus_names()) {
        CAPTURE(name);
        const auto tree = tree_of(name);
        CHECK_NOTHROW(validate_tree(tree));
        CHECK(tree.annotation_failures == 0);
        const auto& root = tree.node(tree.root);
        CHECK_FALSE(root.parent.has_value());
        // Root covers the whole netlist.
        std::set<std::string> all(root.devices.begin(), root.devices.end());
        CHECK(all.size() == tree.source_netlist.devices.size());
        for (const auto& n : tree.nodes) {
            CHECK_FALSE(n.role.empty());
            CHECK_FALSE(n.description.empty());
            if (n.is_leaf()) continue;
            std::multiset<std::string> from_children;
            for (const auto& c : n.children) {
                CHECK(tree.node(c).parent == n.id);
                const auto& cd = tree.node(c).devices;
                from_children.insert(cd.begin(), cd.end());
            }
            CHECK(from_children == std::multiset<std::string>(n.devices.begin(), n.devices.end()));
            for (const auto& loop : n.loops) {
                CHECK(loop.members.size() >= 2);
                for (const auto& m : loop.members) {
                    CHECK(std::find(n.children.begin(), n.children.end(), m) != n.children.end());
                }
            }
        }
    }
}

TEST_CASE("save and load is a fixpoint") {
    for (const auto& name : heart::testing::corpus_names()) {
        CAPTURE(name);
        const auto tree = tree_of(name);
        const auto doc = save_tree(tree);
        CHECK(check_document("tree", doc).valid);
        const auto back = load_tree(doc);
        CHECK(back.root == tree.root);
        CHECK(back.nodes == tree.nodes);
        CHECK(structurally_equal(back.source_netlist, tree.source_netlist));
        CHECK(save_tree(back) == doc);
    }
}

TEST_CASE("load rejects broken documents") {
    auto doc = save_tree(tree_of("ota5t"));
    auto missing_parent = doc;
    missing_parent["nodes"][1]["parent"] = "nowhere";
    CHECK_THROWS_AS(load_tree(missing_parent), Error);
    auto not_object = nlohmann::json::array();
    CHECK_THROWS_AS(load_tree(not_object), Error);
}

TEST_CASE("structure of known circuits") {
    SUBCASE("two-stage front end is flat under the root") {
        const auto t = tree_of("afe3");
        CHECK(t.node(t.root).role == "buffered two-stage amplifier");
        CHECK(t.depth() == 2);
        CHECK(t.node(t.root).children.size() == 6);
    }
    SUBCASE("independent channels get stage nodes") {
        const auto t = tree_of("dual_channel");
        CHECK(t.depth() == 3);
        CHECK(t.node(t.root).role == "multi-channel amplifier");
        CHECK(t.node("stage_1").children.size() == 3);
    }
    SUBCASE("single subcircuit is its own root") {
        const auto t = tree_of("inverter");
        CHECK(t.depth() == 1);
        CHECK(t.node(t.root).is_leaf());
    }
    SUBCASE("relaxation oscillator loop") {
        const auto t = tree_of("relaxation_osc");
        CHECK(t.node(t.root).role == "relaxation oscillator");
        REQUIRE(t.node(t.root).loops.size() == 1);
        CHECK(t.node(t.root).loops[0].members == std::vector<std::string>{"dc_0", "dc_1", "dc_3"});
        CHECK(t.node(t.root).loops[0].polarity_hint.find("oscillation") == 0);
    }
    SUBCASE("ring of three inverters") {
        const auto t = tree_of("ring_osc");
        CHECK(t.node(t.root).role == "ring oscillator");
        CHECK(t.node(t.root).loops.size() == 1);
    }
}

TEST_CASE("flat grouping puts every leaf under the root") {
    RuleAnnotator rule;
    const auto nl = load_circuit("dual_channel");
    const auto t = build_tree(decompose(nl, {}, rule).subcircuits, nl, rule, FlatGrouping{});
    CHECK(t.depth() == 2);
    CHECK(t.node(t.root).children.size() == 6);
}

TEST_CASE("post order and subtree") {
    const auto t = heart::testing::make_tree({{"r", ""}, {"a", "r"}, {"b", "r"}, {"a1", "a"}, {"a2", "a"}});
    CHECK(t.post_order() == std::vector<std::string>{"a1", "a2", "a", "b", "r"});
    CHECK(t.subtree("a") == std::vector<std::string>{"a", "a1", "a2"});
    CHECK(t.depth() == 3);
}

TEST_CASE("boundary ports") {
    const auto nl = load_circuit("ota5t");
    const auto ports = boundary_ports({"Rb", "Mb"}, nl);
    CHECK(ports.supply == std::set<std::string>{"gnd", "vdd"});
    CHECK(ports.signal == std::set<std::string>{"nb"});
}

TEST_CASE("render lists every node") {
    const auto t = tree_of("afe3");
    const auto text = render_tree(t);
    for (const auto& n : t.nodes) CHECK(text.find(n.id) != std::string::npos);
}
