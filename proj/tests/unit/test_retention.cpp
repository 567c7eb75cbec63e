// SPDX-License-Identifier: Apache-2.0
#include "fixtures.hpp"
#include "oracles.hpp"

#include "heart/error.hpp"
#include "heart/evaluators.hpp"
#include "heart/retention.hpp"
#include "heart/schema.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace heart;
using heart::testing::load_circuit;

namespace {

std::vector<std::string> small_fixtures() {
    std::vector<std::string> out;
    for (const auto& name : heart::testing::corpus_names()) {
        if (load_circuit(name).devices.size() <= 6) out.push_back(name);
    }
    return out;
}

}  // namespace

TEST_CASE("identical designs retain everything") {
    for (const auto& name : heart::testing::corpus_names()) {
        CAPTURE(name);
        const auto nl = load_circuit(name);
        const auto r = pckri(nl, nl);
        CHECK(r.pckri == 1.0);
        CHECK(r.trs == 1.0);
        CHECK(r.dvrs == 1.0);
        CHECK(r.d_edit == 0);
        CHECK(check_document("retention", to_json(r)).valid);
    }
}

TEST_CASE("a decade deviation costs exp(-k)") {
    const auto one = dvrs({{"M1.W", 1e-6}}, {{"M1.W", 1e-5}});
    CHECK(std::fabs(one.value - std::exp(-3.0)) <= 1e-12);
    // Beyond a decade the term is capped.
    CHECK(std::fabs(dvrs({{"M1.W", 1e-6}}, {{"M1.W", 1e-3}}).value - std::exp(-3.0)) <= 1e-12);
    const auto mixed = dvrs({{"a", 1.0}, {"b", 2.0}, {"c", 3.0}}, {{"a", 1.0}, {"b", 20.0}, {"c", 3.0}});
    CHECK(std::fabs(mixed.value - (2.0 + std::exp(-3.0)) / 3.0) <= 1e-12);
    SensitivityConfig k1;
    k1.k = 1.0;
    CHECK(std::fabs(dvrs({{"x", 5.0}}, {{"x", 0.5}}, k1).value - std::exp(-1.0)) <= 1e-12);
}

TEST_CASE("dvrs symmetry and lower bound on random vectors") {
    std::mt19937_64 rng(5);
    std::uniform_int_distribution<int> len(1, 12);
    std::uniform_real_distribution<double> logv(-15.0, 6.0);
    std::uniform_real_distribution<double> kdist(0.5, 5.0);
    for (int i = 0; i < 10000; ++i) {
        const int n = len(rng);
        std::vector<VariableValue> a, b;
        for (int j = 0; j < n; ++j) {
            const std::string name = "v" + std::to_string(j);
            a.push_back({name, std::pow(10.0, logv(rng))});
            b.push_back({name, std::pow(10.0, logv(rng))});
        }
        SensitivityConfig cfg;
        cfg.k = kdist(rng);
        const double ab = dvrs(a, b, cfg).value;
        const double ba = dvrs(b, a, cfg).value;
        CHECK(ab == doctest::Approx(ba).epsilon(1e-12));
        CHECK(ab >= std::exp(-cfg.k) - 1e-15);
        CHECK(ab <= 1.0);
    }
}

TEST_CASE("dvrs errors") {
    CHECK_THROWS_AS(dvrs({{"a", 1.0}}, {{"b", 1.0}}), Error);
    CHECK_THROWS_AS(dvrs({{"a", 1.0}}, {{"a", 0.0}}), Error);
    CHECK_THROWS_AS(dvrs({{"a", -1.0}}, {{"a", 1.0}}), Error);
    SensitivityConfig bad;
    bad.k = 0.0;
    CHECK_THROWS_AS(bad.validate(), Error);
}

TEST_CASE("trs arithmetic") {
    CHECK(trs(0, 10) == 1.0);
    CHECK(trs(4, 38) == doctest::Approx(1.0 - 4.0 / 38.0));
    CHECK(trs(20, 10) == doctest::Approx(-1.0));
    CHECK_THROWS_AS(trs(1, 0), Error);
}

TEST_CASE("edit distance is a metric on the small fixtures and matches the bijection oracle") {
    const auto names = small_fixtures();
    REQUIRE(names.size() >= 8);
    for (const auto& a : names) {
        const auto na = load_circuit(a);
        CHECK(circuit_edit_distance(na, na).distance == 0);
        for (const auto& b : names) {
            CAPTURE(a);
            CAPTURE(b);
            const auto nb = load_circuit(b);
            const auto ab = circuit_edit_distance(na, nb);
            CHECK(ab.distance == circuit_edit_distance(nb, na).distance);
            CHECK(ab.distance == heart::testing::edit_distance_oracle(na, nb));
            CHECK(ab.distance <= ab.ref_edges + ab.new_edges);
        }
    }
}

TEST_CASE("edit distance matches the oracle on random pairs") {
    std::mt19937_64 rng(17);
    std::uniform_int_distribution<std::size_t> ndev(1, 6);
    for (int i = 0; i < 400; ++i) {
        const auto a = heart::testing::random_netlist(rng, ndev(rng), 3);
        const auto b = heart::testing::random_netlist(rng, ndev(rng), 3);
        CHECK(circuit_edit_distance(a, b).distance == heart::testing::edit_distance_oracle(a, b));
    }
}

TEST_CASE("resistor terminals are interchangeable") {
    const auto a = parse_netlist("R1 vdd out 1k\nM1 out in gnd gnd nmos W=1u L=1u\n");
    const auto b = parse_netlist("R1 out vdd 1k\nM1 out in gnd gnd nmos W=1u L=1u\n");
    CHECK(circuit_edit_distance(a, b).distance == 0);
    const auto c = parse_netlist("R1 vdd out 1k\nM1 gnd in out gnd nmos W=1u L=1u\n");
    CHECK(circuit_edit_distance(a, c).distance == 4);
}

TEST_CASE("resizing keeps topology and scales dvrs") {
    const auto ref = load_circuit("ota5t");
    const auto resized = apply_values(ref, {{"M1.W", 40e-6}, {"M2.W", 40e-6}});
    const auto r = pckri(ref, resized);
    CHECK(r.trs == 1.0);
    const double n = static_cast<double>(design_variables(ref).size());
    CHECK(r.dvrs == doctest::Approx((n - 2.0 + 2.0 * std::exp(-3.0)) / n));
    CHECK(r.pckri == doctest::Approx(r.trs * r.dvrs));
}

TEST_CASE("reasoning scorer") {
    AnnotationBundle gold;
    gold.circuit_class = "comparator";
    gold.partition = {{"M1", "M2", "M3"}, {"M4", "M5"}};
    gold.loops = {{{"M1", "M2"}, "regenerative"}};
    gold.keywords = {"latch", "offset"};

    AnnotationBundle pred = gold;
    pred.loops[0].purpose = "regenerative feedback loop";
    pred.keywords = {"latched comparator", "influences offset, delay"};
    auto s = score_reasoning(pred, gold);
    CHECK(s.a1 == 1.0);
    CHECK(s.a2 == 1.0);
    CHECK(s.a3 == 1.0);
    CHECK(s.a4 == 1.0);
    CHECK(s.overall == 1.0);

    pred.circuit_class = "COMPARATOR";
    CHECK(score_reasoning(pred, gold).a1 == 1.0);
    pred.partition = {{"M1", "M2"}, {"M3"}, {"M4", "M5"}};  // 2 of 4 gold pairs kept
    pred.keywords = {"latch"};
    pred.loops.clear();
    s = score_reasoning(pred, gold);
    CHECK(s.a2 == doctest::Approx(0.5));
    CHECK(s.a3 == 0.0);
    CHECK(s.a4 == doctest::Approx(0.5));
    CHECK(s.overall == doctest::Approx((1.0 + 0.5 + 0.0 + 0.5) / 4.0));
    pred.kcl_compliant = false;
    CHECK(score_reasoning(pred, gold).a2 == 0.0);

    CHECK(to_json(bundle_from_json(to_json(gold))) == to_json(gold));
    CHECK_THROWS_AS(bundle_from_json(nlohmann::json{{"class", "x"}}), Error);
}
