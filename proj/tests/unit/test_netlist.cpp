// SPDX-License-Identifier: Apache-2.0
#include "fixtures.hpp"
#include "oracles.hpp"

#include "heart/bipartite.hpp"
#include "heart/error.hpp"
#include "heart/netlist.hpp"

#include <doctest.h>

#include <cmath>
#include <functional>
#include <random>

using namespace heart;
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

}  // namespace

TEST_CASE("spice values with suffixes") {
    CHECK(*parse_spice_value("10k") == doctest::Approx(1e4));
    CHECK(*parse_spice_value("2.5meg") == doctest::Approx(2.5e6));
    CHECK(*parse_spice_value("500f") == doctest::Approx(5e-13));
    CHECK(*parse_spice_value("1uF") == doctest::Approx(1e-6));
    CHECK(*parse_spice_value("3e-6") == doctest::Approx(3e-6));
    CHECK(*parse_spice_value("180n") == doctest::Approx(1.8e-7));
    CHECK_FALSE(parse_spice_value("abc").has_value());
    CHECK_FALSE(parse_spice_value("").has_value());
}

TEST_CASE("formatted values parse back exactly") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> mant(1.0, 10.0);
    std::uniform_int_distribution<int> ex(-18, 12);
    for (int i = 0; i < 2000; ++i) {
        const double v = mant(rng) * std::pow(10.0, ex(rng));
        const auto back = parse_spice_value(format_spice_value(v));
        REQUIRE(back.has_value());
        CHECK(*back == v);
    }
}

TEST_CASE("MOS, passive and source cards") {
    const auto nl = parse_netlist(
        "* comment\n"
        "M1 d g s b nmos W=2u L=180n\n"
        "MP2 d2 g vdd vdd PMOS_LVT w=4u l=1u\n"
        "R1 a b 10k\n"
        "C1 a 0 1p\n"
        "L1 a b 1n\n"
        "V1 vdd 0 DC 1.8\n"
        "I1 a 0 DC=10u\n"
        ".end\n");
    REQUIRE(nl.devices.size() == 7);
    CHECK(nl.devices[0].kind == DeviceKind::MosN);
    CHECK(nl.devices[0].net("D") == "d");
    CHECK(nl.devices[0].terminals.size() == 3);  // bulk is dropped
    CHECK(nl.devices[0].params.at("W") == doctest::Approx(2e-6));
    CHECK(nl.devices[1].kind == DeviceKind::MosP);
    CHECK(nl.devices[1].params.at("L") == doctest::Approx(1e-6));
    CHECK(nl.devices[2].kind == DeviceKind::Resistor);
    CHECK(nl.devices[2].params.at("R") == doctest::Approx(1e4));
    CHECK(nl.devices[3].kind == DeviceKind::Capacitor);
    CHECK(nl.devices[4].kind == DeviceKind::Inductor);
    CHECK(nl.devices[5].kind == DeviceKind::VSource);
    CHECK(nl.devices[5].params.at("DC") == doctest::Approx(1.8));
    CHECK(nl.devices[6].params.at("DC") == doctest::Approx(1e-5));
}

TEST_CASE("continuation lines join") {
    const auto nl = parse_netlist("M1 d g s b nmos\n+ W=1u\n+ L=1u\n.end\n");
    CHECK(nl.devices[0].params.at("W") == doctest::Approx(1e-6));
    CHECK(nl.devices[0].params.at("L") == doctest::Approx(1e-6));
}

TEST_CASE("syntax errors carry the line") {
    try {
        parse_netlist("R1 a b 1k\nR2 a\n");
        FAIL("no throw");
    } catch (const SyntaxError& e) {
        CHECK(e.line() == 2);
        CHECK(e.code() == ErrorCode::SyntaxError);
    }
    CHECK(code_of([] { parse_netlist("R1 a b -1k\n"); }) == ErrorCode::SyntaxError);
    CHECK(code_of([] { parse_netlist("M1 d g s b bjt\n"); }) == ErrorCode::SyntaxError);
    CHECK(code_of([] { parse_netlist("R1 a b 1k\nR1 b c 1k\n"); }) == ErrorCode::SyntaxError);
    CHECK(code_of([] { parse_netlist("* nothing\n"); }) == ErrorCode::SyntaxError);
    CHECK(code_of([] { parse_netlist("+ W=1u\n"); }) == ErrorCode::SyntaxError);
}

TEST_CASE("unsupported cards") {
    CHECK(code_of([] { parse_netlist("Q1 c b e npn\n"); }) == ErrorCode::UnsupportedCard);
    CHECK(code_of([] { parse_netlist("R1 a b 1k\n.include foo.sp\n"); }) == ErrorCode::UnsupportedCard);
    CHECK(code_of([] { parse_netlist("X1 a b inv\n"); }) == ErrorCode::UnsupportedCard);
    // Simulator control cards are skipped.
    CHECK_NOTHROW(parse_netlist("R1 a b 1k\n.op\n.tran 1n 10n\n.end\n"));
}

TEST_CASE("one-level subcircuit flattening") {
    const std::string text =
        ".subckt inv in out\n"
        "MP out in vdd vdd pmos W=2u L=180n\n"
        "MN out in gnd gnd nmos W=1u L=180n\n"
        ".ends\n"
        "X1 a b inv\n"
        "X2 b c inv\n"
        ".end\n";
    ParseOptions opt;
    opt.flatten = true;
    const auto nl = parse_netlist(text, opt);
    REQUIRE(nl.devices.size() == 4);
    CHECK(nl.devices[0].name == "X1.MP");
    CHECK(nl.devices[0].net("G") == "a");
    CHECK(nl.devices[0].net("S") == "vdd");
    CHECK(nl.devices[3].net("D") == "c");
    CHECK(code_of([&] { parse_netlist(text); }) == ErrorCode::UnsupportedCard);
}

TEST_CASE("net roles from rails and PININFO") {
    const auto nl = load_circuit("ota5t");
    CHECK(nl.role_of("vdd") == NetRole::SupplyPort);
    CHECK(nl.role_of("gnd") == NetRole::SupplyPort);
    CHECK(nl.role_of("inp") == NetRole::SignalPort);
    CHECK(nl.role_of("out") == NetRole::SignalPort);
    CHECK(nl.role_of("tail") == NetRole::InternalNet);
    CHECK(nl.role_of("X") == NetRole::InternalNet);  // case-insensitive lookup of net "x"
}

TEST_CASE("missing supply") {
    const auto nl = parse_netlist("R1 a b 1k\n");
    CHECK(code_of([&] { annotate_nets(nl, RailConfig{}); }) == ErrorCode::MissingSupply);
}

TEST_CASE("rail aliases") {
    RailConfig rails;
    rails.add_supply("VCCA");
    rails.add_supply("agnd");
    CHECK(rails.is_high("vcca"));
    CHECK(rails.is_low("AGND"));
}

TEST_CASE("serialize then parse is a fixpoint on the corpus") {
    for (const auto& name : heart::testing::corpus_names()) {
        CAPTURE(name);
        const auto nl = parse_netlist_file(heart::testing::data_path("circuits/" + name + ".sp"));
        const auto text = serialize_netlist(nl);
        const auto again = parse_netlist(text, {.name = nl.name});
        CHECK(structurally_equal(nl, again));
        CHECK(serialize_netlist(again) == text);
    }
}

TEST_CASE("bipartite graph invariants") {
    for (const auto& name : heart::testing::corpus_names()) {
        CAPTURE(name);
        const auto nl = load_circuit(name);
        const auto g = build_bipartite(nl);
        CHECK(g.device_nodes.size() == nl.devices.size());
        CHECK(g.net_nodes.size() == nl.nets.size());
        CHECK(g.edges.size() == nl.terminal_count());
        for (const auto& e : g.edges) {
            REQUIRE(e.device < g.device_nodes.size());
            REQUIRE(e.net < g.net_nodes.size());
            CHECK(nl.devices[e.device].net(e.terminal) == g.net_nodes[e.net]);
        }
        std::size_t deg = 0;
        for (const auto& adj : g.device_adjacency()) deg += adj.size();
        CHECK(deg == g.edges.size());
    }
}
