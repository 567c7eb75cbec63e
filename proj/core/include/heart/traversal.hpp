// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "heart/netlist.hpp"
#include "heart/tree.hpp"

#include <nlohmann/json_fwd.hpp>

#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace heart {

class AnnotatorPort;

using TreeEdge = std::pair<std::string, std::string>;  // (parent, child)

// Query-conditioned relevance w(v,u) in [0,1] for every tree edge.
struct EdgeWeights {
    std::map<TreeEdge, double> weights;
    std::map<TreeEdge, std::string> rationales;

    // Throws MissingWeight when the edge is not weighted.
    double weight(const std::string& parent, const std::string& child) const;
};

// Throws AnnotatorFailure if an edge is missing, out of range or lacks a rationale.
void validate_weights(const EdgeWeights& weights, const ReasoningTree& tree);

struct TraversalConfig {
    double tau_stop = 0.3;
    double epsilon = 0.05;

    void validate() const;  // InvalidConfig
};

enum class CutReason { AllWeak, NoDominant };

std::string_view to_string(CutReason reason);

struct BranchDecision {
    bool expand = true;
    CutReason reason = CutReason::AllWeak;  // meaningful only when !expand

    static BranchDecision cut(CutReason r) { return {false, r}; }
    static BranchDecision admit() { return {true, CutReason::AllWeak}; }
    bool operator==(const BranchDecision&) const = default;
};

// Stop expanding when every child is weak (max < tau_stop) or when no child
// dominates (max - min < epsilon). A single child is admitted iff its weight
// reaches tau_stop. Requires at least one child.
BranchDecision branch_cut(const TreeNode& node, const EdgeWeights& weights, const TraversalConfig& cfg);

struct ReasoningTrace {
    std::string query;
    TraversalConfig config;
    EdgeWeights weights;
    std::vector<std::string> visited;  // BFS order
    std::map<std::string, CutReason> cut_nodes;
    std::set<std::string> terminal_nodes;
    std::vector<std::vector<std::string>> paths;  // root -> terminal
    std::map<std::string, std::vector<std::string>> scoped_subtrees;

    // Weight of the edge entering a terminal (1.0 for the root).
    double terminal_weight(const std::string& id) const;
};

ReasoningTrace traverse(const ReasoningTree& tree, const std::string& query, const AnnotatorPort& annotator,
                        const TraversalConfig& cfg);
// Same BFS with precomputed weights.
ReasoningTrace traverse_with_weights(const ReasoningTree& tree, const std::string& query, const EdgeWeights& weights,
                                     const TraversalConfig& cfg);

// Highest-weight terminal, ties broken by the smaller device fragment, then id.
std::string primary_terminal(const ReasoningTrace& trace, const ReasoningTree& tree);

struct DesignVariable {
    std::string name;  // device.param, e.g. "M1.W"
    double reference = 0.0;
    double lower = 0.0;
    double upper = 0.0;
    bool log_scale = true;
};

struct ScopeConfig {
    // Bounds are [reference / span, reference * span].
    double span = 4.0;
    // Scope these nodes and their subtrees instead of the trace's terminals.
    // When empty, the dominant terminals (entering weight within epsilon of
    // the strongest) are scoped.
    std::vector<std::string> terminals;
    // Scope every terminal regardless of its entering weight.
    bool all_terminals = false;
};

struct ScopedVariableSet {
    std::vector<DesignVariable> variables;
    std::map<std::string, double> frozen;
    std::vector<std::string> scoped_devices;
};

// Tunable parameters (W, L, R, C) of every device in the netlist. Devices in
// `scoped` become variables, the rest are frozen at their reference values.
ScopedVariableSet scope_devices(const std::set<std::string>& scoped, const CircuitNetlist& netlist,
                                const ScopeConfig& cfg = {});

// Variables of devices inside the scoped subtrees of the selected terminals.
// Throws EmptyScope.
ScopedVariableSet scope_design_variables(const ReasoningTrace& trace, const ReasoningTree& tree,
                                         const CircuitNetlist& netlist, const ScopeConfig& cfg = {});

nlohmann::json to_json(const ReasoningTrace& trace);
ReasoningTrace trace_from_json(const nlohmann::json& document);

}  // namespace heart
