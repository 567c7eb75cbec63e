// SPDX-License-Identifier: Apache-2.0
#include "heart/annotator.hpp"
#include "heart/bipartite.hpp"
#include "heart/decomposition.hpp"
#include "heart/optimizer.hpp"
#include "heart/retention.hpp"
#include "heart/topo_db.hpp"
#include "heart/traversal.hpp"
#include "heart/tree.hpp"

#include <benchmark/benchmark.h>

#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

namespace {

std::string read_circuit(const std::string& name) {
    std::ifstream in(std::string(HEART_DATA_DIR) + "/circuits/" + name + ".sp");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

heart::CircuitNetlist load(const std::string& name) {
    return heart::annotate_nets(heart::parse_netlist(read_circuit(name)), {});
}

void BM_Parse(benchmark::State& state) {
    const auto text = read_circuit("sar_adc");
    for (auto _ : state) benchmark::DoNotOptimize(heart::parse_netlist(text));
}
BENCHMARK(BM_Parse);

void BM_DcAlive(benchmark::State& state) {
    const auto nl = load("afe3");
    const auto graph = heart::build_bipartite(nl);
    const auto rails = heart::effective_rails(nl, {});
    for (auto _ : state) benchmark::DoNotOptimize(heart::dc_alive_devices(graph, rails));
}
BENCHMARK(BM_DcAlive);

void BM_DecomposeAndTree(benchmark::State& state) {
    const auto nl = load("afe3");
    heart::RuleAnnotator rule;
    for (auto _ : state) {
        auto tree = heart::build_tree(heart::decompose(nl, {}, rule).subcircuits, nl, rule);
        benchmark::DoNotOptimize(tree);
    }
}
BENCHMARK(BM_DecomposeAndTree);

void BM_Traverse(benchmark::State& state) {
    const auto nl = load("afe3");
    heart::RuleAnnotator rule;
    const auto tree = heart::build_tree(heart::decompose(nl, {}, rule).subcircuits, nl, rule);
    for (auto _ : state) benchmark::DoNotOptimize(heart::traverse(tree, "reduce noise and area", rule, {}));
}
BENCHMARK(BM_Traverse);

void BM_EditDistance(benchmark::State& state) {
    const auto a = load("ota5t");
    const auto b = load("comparator_latch");
    for (auto _ : state) benchmark::DoNotOptimize(heart::circuit_edit_distance(a, b));
}
BENCHMARK(BM_EditDistance);

void BM_Retrieve(benchmark::State& state) {
    const auto rows = static_cast<int>(state.range(0));
    nlohmann::json doc{{"category", "bench"}, {"metrics", {"m0", "m1", "m2", "m3", "m4", "m5"}}};
    std::mt19937_64 rng(1);
    std::vector<std::vector<int>> perms(6);
    for (auto& p : perms) {
        for (int i = 1; i <= rows; ++i) p.push_back(i);
        std::shuffle(p.begin(), p.end(), rng);
    }
    for (int r = 0; r < rows; ++r) {
        nlohmann::json ranks;
        for (int m = 0; m < 6; ++m) ranks["m" + std::to_string(m)] = perms[m][r];
        doc["topologies"].push_back({{"topo_id", "t" + std::to_string(r)}, {"ranks", ranks}, {"netlist_template", ""}, {"notes", ""}});
    }
    const auto table = heart::ingest_table(doc);
    heart::RetrievalQuery q;
    q.objectives = {{"m0", 2.0}, {"m1", 1.0}, {"m2", 1.0}};
    q.constraints = {{"m3", heart::Tone::Strict, rows / 2}, {"m4", heart::Tone::Relaxed, 1}};
    q.normalize();
    for (auto _ : state) benchmark::DoNotOptimize(heart::retrieve(table, q, 3));
}
BENCHMARK(BM_Retrieve)->Arg(12)->Arg(200);

void BM_GpFit(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<std::vector<double>> x(n, std::vector<double>(12));
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (auto& v : x[i]) v = u(rng);
        y[i] = std::sin(3.0 * x[i][0]) + x[i][1] * x[i][2];
    }
    for (auto _ : state) {
        heart::GaussianProcess gp;
        gp.fit(x, y);
        benchmark::DoNotOptimize(gp.lengthscale());
    }
}
BENCHMARK(BM_GpFit)->Arg(50)->Arg(200);

}  // namespace
BENCHMARK_MAIN();
