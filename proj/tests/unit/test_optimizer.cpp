// SPDX-License-Identifier: Apache-2.0
#include "heart/error.hpp"
#include "heart/evaluators.hpp"
#include "heart/optimizer.hpp"
#include "heart/schema.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace heart;

namespace {

SearchSpace box(std::size_t d, bool log_scale = false) {
    SearchSpace s;
    for (std::size_t j = 0; j < d; ++j) {
        const double lo = log_scale ? 0.1 : -1.0;
        const double hi = log_scale ? 10.0 : 1.0;
        s.variables.push_back({"x" + std::to_string(j), log_scale ? 1.0 : 0.0, lo, hi, log_scale});
    }
    return s;
}

SphereEvaluator sphere(std::size_t d, double c) {
    std::map<std::string, double> center, range;
    for (std::size_t j = 0; j < d; ++j) {
        center["x" + std::to_string(j)] = c;
        range["x" + std::to_string(j)] = 2.0;
    }
    return SphereEvaluator(center, range);
}

}  // namespace

TEST_CASE("unit cube mapping") {
    const auto lin = box(1);
    CHECK(lin.to_value(0, 0.5) == doctest::Approx(0.0));
    CHECK(lin.to_unit(0, 1.0) == doctest::Approx(1.0));
    const auto lg = box(1, true);
    CHECK(lg.to_value(0, 0.5) == doctest::Approx(1.0));
    CHECK(lg.to_value(0, 0.25) == doctest::Approx(std::sqrt(0.1)));
    CHECK(lg.to_unit(0, lg.to_value(0, 0.37)) == doctest::Approx(0.37));
    // The reference is reproduced exactly.
    const auto p = lg.point(lg.reference_unit());
    CHECK(p.variables[0].second == 1.0);
}

TEST_CASE("search space validation") {
    SearchSpace s = box(2);
    s.variables[1].upper = s.variables[1].lower;
    CHECK_THROWS_AS(s.validate(), Error);
    SearchSpace empty;
    CHECK_THROWS_AS(empty.validate(), Error);
    SearchSpace neg = box(1, true);
    neg.variables[0].lower = -1.0;
    CHECK_THROWS_AS(neg.validate(), Error);
    SearchSpace dup = box(1);
    dup.frozen["x0"] = 1.0;
    CHECK_THROWS_AS(dup.validate(), Error);
}

TEST_CASE("gaussian process interpolates and is uncertain away from data") {
    GaussianProcess gp;
    std::vector<std::vector<double>> x;
    std::vector<double> y;
    for (int i = 0; i <= 10; ++i) {
        const double t = i / 10.0;
        x.push_back({t});
        y.push_back(std::sin(6.0 * t));
    }
    gp.fit(x, y);
    for (std::size_t i = 0; i < x.size(); ++i) {
        const auto [m, s] = gp.predict(x[i]);
        CHECK(m == doctest::Approx(y[i]).epsilon(1e-2));
        CHECK(s < 0.05);
    }
    const auto [m_mid, s_mid] = gp.predict({0.55});
    CHECK(m_mid == doctest::Approx(std::sin(3.3)).epsilon(0.1));
    CHECK(gp.lengthscale() > 0.0);
}

TEST_CASE("BO and DE solve a sphere") {
    for (const std::string kind : {"bo", "de"}) {
        CAPTURE(kind);
        auto ev = sphere(3, 0.4);
        OptimizerChoice c;
        c.kind = kind;
        const auto r = optimize(box(3), ev, {120, 3, {}}, c);
        CHECK(r.history.size() == 120);
        CHECK(ev.calls() == 120);
        CHECK(r.best().fom > 0.98);
        for (std::size_t i = 1; i < r.history.size(); ++i) CHECK(r.history[i].best_fom >= r.history[i - 1].best_fom);
        CHECK(check_document("run_record", to_json(r)).valid);
    }
}

TEST_CASE("the first evaluation is the reference") {
    for (const std::string kind : {"bo", "de"}) {
        auto ev = sphere(2, 0.4);
        OptimizerChoice c;
        c.kind = kind;
        const auto r = optimize(box(2), ev, {30, 1, {}}, c);
        CHECK(r.history[0].point.variables[0].second == 0.0);
    }
}

TEST_CASE("runs are reproducible from the seed") {
    for (const std::string kind : {"bo", "de"}) {
        CAPTURE(kind);
        OptimizerChoice c;
        c.kind = kind;
        auto e1 = sphere(4, -0.3);
        auto e2 = sphere(4, -0.3);
        const auto a = optimize(box(4), e1, {60, 42, {}}, c);
        const auto b = optimize(box(4), e2, {60, 42, {}}, c);
        CHECK(to_json(a) == to_json(b));
        auto e3 = sphere(4, -0.3);
        const auto other = optimize(box(4), e3, {60, 43, {}}, c);
        CHECK(to_json(other) != to_json(a));
    }
}

TEST_CASE("DE strategies") {
    for (const std::string strategy : {"rand1", "best1", "current_to_best1"}) {
        CAPTURE(strategy);
        OptimizerChoice c;
        c.kind = "de";
        c.de.strategy = strategy;
        auto ev = sphere(2, 0.5);
        CHECK(optimize(box(2), ev, {150, 9, {}}, c).best().fom > 0.95);
    }
    OptimizerChoice bad;
    bad.kind = "de";
    bad.de.strategy = "best2";
    auto ev = sphere(2, 0.5);
    CHECK_THROWS_AS(optimize(box(2), ev, {50, 1, {}}, bad), Error);
}

TEST_CASE("budget checks") {
    auto ev = sphere(2, 0.0);
    OptimizerChoice bo;
    CHECK_THROWS_AS(optimize(box(2), ev, {5, 0, {}}, bo), Error);
    OptimizerChoice de;
    de.kind = "de";
    CHECK_NOTHROW(optimize(box(2), ev, {4, 0, {}}, de));
    try {
        optimize(box(2), ev, {3, 0, {}}, de);
        FAIL("expected BudgetTooSmall");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::BudgetTooSmall);
    }
    de.de.population = 3;
    CHECK_THROWS_AS(optimize(box(2), ev, {50, 0, {}}, de), Error);
    OptimizerChoice unknown;
    unknown.kind = "pso";
    CHECK_THROWS_AS(optimize(box(2), ev, {50, 0, {}}, unknown), Error);
}

TEST_CASE("optimizer config parsing") {
    auto c = optimizer_from_json({{"kind", "de"}, {"params", {{"F", 0.6}, {"CR", 0.7}, {"strategy", "best1"}}}});
    CHECK(c.de.F == 0.6);
    CHECK(c.de.strategy == "best1");
    c = optimizer_from_json({{"kind", "bo"}, {"params", {{"kappa", 1.5}, {"initial", 6}}}});
    CHECK(c.bo.kappa == 1.5);
    CHECK(c.bo.initial == 6);
    CHECK_THROWS_AS(optimizer_from_json({{"kind", "bo"}, {"params", {{"F", 0.5}}}}), Error);
    CHECK_THROWS_AS(optimizer_from_json({{"kind", "cma"}}), Error);
}

TEST_CASE("evals to a fraction of the final best") {
    RunRecord r;
    const double best[] = {1.0, 5.0, 9.0, 9.6, 10.0};
    for (std::size_t i = 0; i < 5; ++i) {
        HistoryEntry h;
        h.eval = i + 1;
        h.best_fom = best[i];
        r.history.push_back(h);
    }
    CHECK(r.evals_to_fraction(0.95) == 4);
    CHECK(r.evals_to_fraction(0.9) == 3);
    CHECK(r.evals_to_fraction(1.0) == 5);
    // Negative optima use the magnitude of the final best.
    for (auto& h : r.history) h.best_fom -= 20.0;
    CHECK(r.evals_to_fraction(0.95) == 4);
    CHECK(r.evals_to_fraction(0.99) == 5);
}

TEST_CASE("retention callback fills history") {
    auto ev = sphere(2, 0.1);
    RunOptions opt{20, 0, [](const DesignPoint& p) -> std::optional<double> { return p.values().at("x0"); }};
    const auto r = optimize(box(2), ev, opt, OptimizerChoice{});
    for (const auto& h : r.history) {
        REQUIRE(h.pckri.has_value());
        CHECK(*h.pckri == h.point.values().at("x0"));
    }
}
