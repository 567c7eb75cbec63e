// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "heart/evaluators.hpp"
#include "heart/optimizer.hpp"
#include "heart/retention.hpp"
#include "heart/topo_db.hpp"
#include "heart/traversal.hpp"
#include "heart/tree.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace heart {

class AnnotatorPort;

struct ScenarioSettings {
    TraversalConfig traversal;
    ScopeConfig scope;
    SensitivityConfig retention;
    RailConfig rails;
    // Topology scenario only.
    std::size_t top_k = 2;
    double incumbent_fraction = 0.2;
    std::optional<std::string> incumbent_topology;  // row id of the current fragment
    std::string retrieval_query;                    // defaults to the sizing query
};

// One-time traversal, then sizing over the scoped variables only. History
// entries carry PCKRI against the tree's netlist.
RunRecord run_scenario_sizing(const ReasoningTree& tree, const std::string& query, const AnnotatorPort& annotator,
                              const EvaluatorFactory& evaluator, const OptimizerChoice& optimizer,
                              const RunOptions& options, const ScenarioSettings& cfg = {});

// Sizing over an explicit variable set with a fixed reference for PCKRI.
RunRecord run_sizing(const SearchSpace& space, Evaluator& evaluator, const CircuitNetlist& reference,
                     const CircuitNetlist& design, const OptimizerChoice& optimizer, const RunOptions& options,
                     const SensitivityConfig& retention = {});

struct TopologyTemplate {
    std::string name;
    std::vector<std::string> ports;
    std::vector<Device> devices;
};

// `.subckt name ports ... .ends` text. Throws SyntaxError/SchemaError.
TopologyTemplate parse_template(const std::string& text);

struct SwapResult {
    CircuitNetlist netlist;               // annotated
    std::vector<std::string> new_devices;  // names after collision renaming
};

// Replaces the devices of `node` with the template, binding template ports to
// the node's signal and supply ports by name. Throws PortBindingMismatch.
SwapResult swap_fragment(const CircuitNetlist& netlist, const TreeNode& node, const TopologyTemplate& tpl,
                         const RailConfig& rails = {});

// Traversal picks the bottleneck node, retrieval proposes replacements, each
// candidate is swapped in and sized on its share of the budget. The record's
// history concatenates every stage; extra lists the candidates.
RunRecord run_scenario_topology(const ReasoningTree& tree, const std::string& query, const KnowledgeTable& table,
                                const AnnotatorPort& annotator, const EvaluatorFactory& evaluator,
                                const OptimizerChoice& optimizer, const RunOptions& options,
                                const ScenarioSettings& cfg = {});

// Scenario config file. Relative paths resolve against the file's directory.
struct ScenarioConfig {
    std::string mode = "sizing";  // "sizing" | "topology"
    std::string netlist;
    std::optional<std::string> tree;
    std::string query;
    OptimizerChoice optimizer;
    std::size_t budget = 200;
    std::uint64_t seed = 0;
    nlohmann::json evaluator;
    std::optional<std::string> db;
    ScenarioSettings settings;
    std::string annotator = "rule";
};

ScenarioConfig scenario_from_json(const nlohmann::json& document, const std::string& base_dir = ".");
ScenarioConfig load_scenario(const std::string& path);

// Loads inputs, builds or loads the tree and runs the configured scenario.
RunRecord run_scenario(const ScenarioConfig& cfg, const AnnotatorPort& annotator);

}  // namespace heart
