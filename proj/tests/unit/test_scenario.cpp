// SPDX-License-Identifier: Apache-2.0
#include "fixtures.hpp"

#include "heart/annotator.hpp"
#include "heart/decomposition.hpp"
#include "heart/error.hpp"
#include "heart/retention.hpp"
#include "heart/scenario.hpp"
#include "heart/schema.hpp"

#include <doctest.h>

#include <set>

using namespace heart;
using heart::testing::data_path;
using heart::testing::load_circuit;

namespace {

ErrorCode code_of(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected heart::Error");
    return ErrorCode::IoError;
}

ReasoningTree tree_of(const std::string& name) {
    RuleAnnotator rule;
    const auto nl = load_circuit(name);
    return build_tree(decompose(nl, {}, rule).subcircuits, nl, rule);
}

const TreeNode& node_with(const ReasoningTree& tree, const std::string& device) {
    for (const auto& n : tree.nodes) {
        if (n.is_leaf() && std::count(n.devices.begin(), n.devices.end(), device)) return n;
    }
    FAIL("no leaf holds " << device);
    return tree.nodes.front();
}

const char* kTemplate = ".subckt pair inp inn o1 nb vdd gnd\n"
                        "M1 x inp tail gnd nmos W=6u L=500n\n"
                        "M2 o1 inn tail gnd nmos W=6u L=500n\n"
                        "M3 x x vdd vdd pmos W=3u L=1u\n"
                        "M4 o1 x vdd vdd pmos W=3u L=1u\n"
                        "M5 tail nb gnd gnd nmos W=4u L=1u\n"
                        ".ends\n";

}  // namespace

TEST_CASE("template parsing") {
    const auto tpl = parse_template(kTemplate);
    CHECK(tpl.name == "pair");
    CHECK(tpl.ports == std::vector<std::string>{"inp", "inn", "o1", "nb", "vdd", "gnd"});
    CHECK(tpl.devices.size() == 5);
    CHECK(code_of([] { parse_template("M1 a b c d nmos\n"); }) == ErrorCode::SchemaError);
    CHECK(code_of([] { parse_template(".subckt x a b\n.ends\n"); }) == ErrorCode::SchemaError);
    CHECK(code_of([] { parse_template(".subckt x a b\nR1 a b 1k\n"); }) == ErrorCode::SchemaError);
}

TEST_CASE("swapping the input stage of the front end") {
    const auto tree = tree_of("afe_s2");
    const auto& node = node_with(tree, "M1");
    const auto swap = swap_fragment(tree.source_netlist, node, parse_template(kTemplate));
    // Same device count; clashing names and internal nets are renamed.
    CHECK(swap.netlist.devices.size() == tree.source_netlist.devices.size());
    CHECK(swap.new_devices.size() == 5);
    std::set<std::string> names;
    for (const auto& d : swap.netlist.devices) names.insert(d.name);
    CHECK(names.size() == swap.netlist.devices.size());
    // Identical replacement keeps the topology.
    CHECK(pckri(tree.source_netlist, swap.netlist).d_edit == 0);

    auto wrong = parse_template(".subckt bad inp inn o1 vdd gnd\nM1 o1 inp gnd gnd nmos W=1u L=1u\n"
                                "M2 o1 inn vdd vdd pmos W=1u L=1u\n.ends\n");
    CHECK(code_of([&] { swap_fragment(tree.source_netlist, node, wrong); }) == ErrorCode::PortBindingMismatch);
    auto extra = parse_template(".subckt bad inp inn o1 nb vdd gnd zz\nM1 o1 inp gnd gnd nmos W=1u L=1u\n.ends\n");
    CHECK(code_of([&] { swap_fragment(tree.source_netlist, node, extra); }) == ErrorCode::PortBindingMismatch);
}

TEST_CASE("scenario config parsing") {
    const auto cfg = load_scenario(data_path("scenarios/afe_topology_bo.json"));
    CHECK(cfg.mode == "topology");
    CHECK(cfg.settings.top_k == 1);
    CHECK(cfg.settings.incumbent_topology == std::optional<std::string>("five_transistor_ota"));
    REQUIRE(cfg.db.has_value());
    CHECK(cfg.db->find("db/ota_frontends.json") != std::string::npos);

    nlohmann::json doc = {{"netlist", "x.sp"}, {"query", "q"}, {"evaluator", {{"kind", "sphere"}}}};
    CHECK_NOTHROW(scenario_from_json(doc));
    auto unknown = doc;
    unknown["budjet"] = 10;
    CHECK(code_of([&] { scenario_from_json(unknown); }) == ErrorCode::InvalidConfig);
    auto nested = doc;
    nested["scope"] = {{"spam", 2}};
    CHECK(code_of([&] { scenario_from_json(nested); }) == ErrorCode::InvalidConfig);
    auto zero = doc;
    zero["budget"] = 0;
    CHECK(code_of([&] { scenario_from_json(zero); }) == ErrorCode::BudgetTooSmall);
    auto topo = doc;
    topo["mode"] = "topology";
    CHECK(code_of([&] { scenario_from_json(topo); }) == ErrorCode::InvalidConfig);
    CHECK(code_of([] { load_scenario("/nonexistent/scenario.json"); }) == ErrorCode::IoError);
}

TEST_CASE("sizing scenario keeps unscoped values and records retention") {
    auto cfg = load_scenario(data_path("scenarios/bench12_scoped_de.json"));
    cfg.budget = 40;
    RuleAnnotator rule;
    const auto r = run_scenario(cfg, rule);
    CHECK(r.history.size() == 40);
    CHECK(check_document("run_record", to_json(r)).valid);
    CHECK(r.space.variables.size() < 12);
    for (const auto& h : r.history) {
        REQUIRE(h.pckri.has_value());
        CHECK(*h.pckri <= 1.0);
        CHECK(*h.pckri > 0.0);
    }
    // The reference point is evaluated first and retains everything.
    CHECK(*r.history.front().pckri == doctest::Approx(1.0));
}

TEST_CASE("topology scenario swaps the bottleneck") {
    auto cfg = load_scenario(data_path("scenarios/afe_topology_de.json"));
    cfg.budget = 60;
    RuleAnnotator rule;
    const auto r = run_scenario(cfg, rule);
    CHECK(r.history.size() == 60);
    CHECK(check_document("run_record", to_json(r)).valid);
    REQUIRE(r.extra.contains("selected_topology"));
    REQUIRE(r.extra.contains("stages"));
    CHECK(r.extra["stages"].size() >= 2);
    CHECK(r.extra["stages"][0]["topology_id"] == "five_transistor_ota");
}
