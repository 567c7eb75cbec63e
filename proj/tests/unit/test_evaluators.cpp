// SPDX-License-Identifier: Apache-2.0
#include "fixtures.hpp"

#include "heart/error.hpp"
#include "heart/evaluators.hpp"
#include "heart/retention.hpp"

#include <doctest.h>

#include <cmath>

using namespace heart;
using heart::testing::load_circuit;

namespace {

Metrics afe_metrics(const CircuitNetlist& nl) {
    AfeModelConfig cfg;
    cfg.specs = {{"noise", 50.0, true, 1.0}};
    return AfeEvaluator(nl, cfg).evaluate_netlist(nl);
}

}  // namespace

TEST_CASE("apply_values overwrites device parameters") {
    const auto nl = load_circuit("ota5t");
    const auto out = apply_values(nl, {{"M1.w", 9e-6}, {"m2.L", 2e-6}});
    for (const auto& d : out.devices) {
        if (d.name == "M1") CHECK(d.params.at("W") == 9e-6);
        if (d.name == "M2") CHECK(d.params.at("L") == 2e-6);
    }
    CHECK_THROWS_AS(apply_values(nl, {{"M99.W", 1.0}}), Error);
    CHECK_THROWS_AS(apply_values(nl, {{"M1", 1.0}}), Error);
}

TEST_CASE("spec margins are relative and capped") {
    CHECK(spec_margin(150.0, {"gain", 100.0, false, 1.0}) == doctest::Approx(0.5));
    CHECK(spec_margin(50.0, {"gain", 100.0, false, 1.0}) == doctest::Approx(-0.5));
    CHECK(spec_margin(25.0, {"noise", 50.0, true, 1.0}) == doctest::Approx(0.5));
    CHECK(spec_margin(-1000.0, {"noise", 50.0, true, 1.0}) == 1.0);
    const std::vector<MetricSpec> specs{{"gain", 100.0, false, 2.0}, {"noise", 50.0, true, 1.0}};
    CHECK(spec_fom({{"gain", 110.0}, {"noise", 40.0}}, specs) == doctest::Approx(100.0 * (2.0 * 0.1 + 0.2)));
    CHECK_THROWS_AS(spec_fom({{"gain", 1.0}}, specs), Error);
    CHECK_THROWS_AS(specs_from_json(nlohmann::json::parse(R"([{"metric": "gain", "target": 0}])")), Error);
}

TEST_CASE("active subspace benchmark") {
    ActiveSubspaceConfig cfg;
    cfg.reference = {{"a", 1.0}, {"b", 2.0}, {"c", 3.0}};
    cfg.optimum_z = {{"a", 0.5}};
    ActiveSubspaceEvaluator ev(cfg);
    const auto fom_at = [&](std::map<std::string, double> v) {
        DesignPoint p;
        for (const auto& [k, x] : v) p.variables.emplace_back(k, x);
        return ev.fom(ev.evaluate(p));
    };
    CHECK(fom_at({{"a", 2.0}, {"b", 2.0}, {"c", 3.0}}) == doctest::Approx(100.0));
    CHECK(fom_at({{"a", 1.0}, {"b", 2.0}, {"c", 3.0}}) == doctest::Approx(100.0 * std::exp(-0.25 / (2.0 * 0.49))));
    // Moving an inactive variable a full span away costs exp(-penalty / 2).
    CHECK(fom_at({{"a", 2.0}, {"b", 8.0}, {"c", 3.0}}) == doctest::Approx(100.0 * std::exp(-1.5 / 2.0)));
}

TEST_CASE("AFE surrogate responds to sizing") {
    const auto nl = load_circuit("afe_s2");
    const auto ref = afe_metrics(nl);
    for (const char* m : {"noise", "area", "power", "gain", "bandwidth", "offset"}) {
        CAPTURE(m);
        REQUIRE(ref.count(m));
        CHECK(std::isfinite(ref.at(m)));
    }
    CHECK(ref.at("noise") > 0.0);
    CHECK(ref.at("area") > 0.0);
    CHECK(ref.at("power") > 0.0);

    // Larger input devices: less noise and offset, more area.
    const auto big = afe_metrics(apply_values(nl, {{"M1.W", 24e-6}, {"M2.W", 24e-6}}));
    CHECK(big.at("noise") < ref.at("noise"));
    CHECK(big.at("offset") < ref.at("offset"));
    CHECK(big.at("area") > ref.at("area"));
    // A stronger bias reference burns more power.
    const auto hot = afe_metrics(apply_values(nl, {{"Rb.R", 30e3}}));
    CHECK(hot.at("power") > ref.at("power"));
}

TEST_CASE("oscillator surrogate") {
    const auto nl = load_circuit("relaxation_osc");
    OscillatorModelConfig cfg;
    cfg.specs = {{"freq_error", 1.0, true, 1.0}};
    OscillatorEvaluator ev(nl, cfg);
    DesignPoint p;
    const auto m = ev.evaluate(p);
    CHECK(m.at("freq_error") >= 0.0);
    CHECK(m.at("power") > 0.0);
    CHECK(m.at("area") > 0.0);
    // Doubling the timing capacitor roughly halves the frequency.
    double c1 = 0.0;
    for (const auto& v : design_variables(nl)) {
        if (v.name == "C1.C") c1 = v.value;
    }
    REQUIRE(c1 > 0.0);
    p.variables = {{"C1.C", 2.0 * c1}};
    const double slow = ev.evaluate(p).at("frequency");
    CHECK(slow < m.at("frequency"));
    CHECK(slow > 0.45 * m.at("frequency"));
}

TEST_CASE("evaluator factory") {
    const auto nl = load_circuit("bench12");
    auto make = make_evaluator_factory({{"kind", "active_subspace"}, {"params", {{"active", {{"MP2.W", 0.5}}}}}});
    auto ev = make(nl);
    CHECK(ev->concurrent_safe());
    DesignPoint ref;
    CHECK(ev->fom(ev->evaluate(ref)) < 100.0);

    CHECK_THROWS_AS(make_evaluator_factory({{"kind", "spice"}}), Error);
    CHECK_THROWS_AS(make_evaluator_factory({{"kind", "afe"}, {"params", nlohmann::json::object()}}), Error);
}
