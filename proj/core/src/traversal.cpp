// SPDX-License-Identifier: Apache-2.0
#include "heart/traversal.hpp"

#include "heart/annotator.hpp"
#include "heart/error.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <deque>

namespace heart {

double EdgeWeights::weight(const std::string& parent, const std::string& child) const {
    auto it = weights.find({parent, child});
    if (it == weights.end()) throw Error(ErrorCode::MissingWeight, "edge " + parent + " -> " + child + " has no weight");
    return it->second;
}

void validate_weights(const EdgeWeights& weights, const ReasoningTree& tree) {
    std::size_t edges = 0;
    for (const auto& n : tree.nodes) {
        for (const auto& c : n.children) {
            ++edges;
            const TreeEdge edge{n.id, c};
            auto it = weights.weights.find(edge);
            if (it == weights.weights.end()) {
                throw Error(ErrorCode::AnnotatorFailure, "no weight for edge " + n.id + " -> " + c);
            }
            if (!std::isfinite(it->second) || it->second < 0.0 || it->second > 1.0) {
                throw Error(ErrorCode::AnnotatorFailure, "weight of " + n.id + " -> " + c + " outside [0,1]");
            }
            auto r = weights.rationales.find(edge);
            if (r == weights.rationales.end() || r->second.empty()) {
                throw Error(ErrorCode::AnnotatorFailure, "edge " + n.id + " -> " + c + " lacks a rationale");
            }
        }
    }
    if (weights.weights.size() != edges) {
        throw Error(ErrorCode::AnnotatorFailure, "weights name edges that are not in the tree");
    }
}

void TraversalConfig::validate() const {
    if (!(tau_stop >= 0.0 && tau_stop <= 1.0)) throw Error(ErrorCode::InvalidConfig, "tau_stop must lie in [0,1]");
    if (!(epsilon >= 0.0) || !std::isfinite(epsilon)) throw Error(ErrorCode::InvalidConfig, "epsilon must be >= 0");
}

std::string_view to_string(CutReason reason) {
    return reason == CutReason::AllWeak ? "ALL_WEAK" : "NO_DOMINANT";
}

namespace {

CutReason cut_reason_from_string(const std::string& text) {
    if (text == "ALL_WEAK") return CutReason::AllWeak;
    if (text == "NO_DOMINANT") return CutReason::NoDominant;
    throw Error(ErrorCode::SchemaError, "unknown cut reason '" + text + "'");
}

}  // namespace

BranchDecision branch_cut(const TreeNode& node, const EdgeWeights& weights, const TraversalConfig& cfg) {
    if (node.children.empty()) throw Error(ErrorCode::InvariantViolation, "branch_cut on childless node " + node.id);
    double hi = -1.0;
    double lo = 2.0;
    for (const auto& c : node.children) {
        const double w = weights.weight(node.id, c);
        hi = std::max(hi, w);
        lo = std::min(lo, w);
    }
    if (hi < cfg.tau_stop) return BranchDecision::cut(CutReason::AllWeak);
    if (node.children.size() > 1 && hi - lo < cfg.epsilon) return BranchDecision::cut(CutReason::NoDominant);
    return BranchDecision::admit();
}

double ReasoningTrace::terminal_weight(const std::string& id) const {
    for (const auto& [edge, w] : weights.weights) {
        if (edge.second == id) return w;
    }
    return 1.0;
}

ReasoningTrace traverse_with_weights(const ReasoningTree& tree, const std::string& query, const EdgeWeights& weights,
                                     const TraversalConfig& cfg) {
    cfg.validate();
    validate_weights(weights, tree);
    ReasoningTrace trace;
    trace.query = query;
    trace.config = cfg;
    trace.weights = weights;

    std::vector<std::string> terminal_order;
    std::deque<std::string> queue{tree.root};
    while (!queue.empty()) {
        const std::string id = queue.front();
        queue.pop_front();
        trace.visited.push_back(id);
        const TreeNode& node = tree.node(id);
        if (node.is_leaf()) {
            terminal_order.push_back(id);
            continue;
        }
        const BranchDecision decision = branch_cut(node, weights, cfg);
        if (!decision.expand) {
            trace.cut_nodes[id] = decision.reason;
            terminal_order.push_back(id);
            continue;
        }
        for (const auto& c : node.children) queue.push_back(c);
    }
    for (const auto& id : terminal_order) {
        trace.terminal_nodes.insert(id);
        std::vector<std::string> path{id};
        for (auto p = tree.node(id).parent; p; p = tree.node(*p).parent) path.push_back(*p);
        std::reverse(path.begin(), path.end());
        trace.paths.push_back(std::move(path));
        trace.scoped_subtrees[id] = tree.subtree(id);
    }
    return trace;
}

ReasoningTrace traverse(const ReasoningTree& tree, const std::string& query, const AnnotatorPort& annotator,
                        const TraversalConfig& cfg) {
    cfg.validate();
    EdgeWeights weights;
    try {
        weights = annotator.weigh_edges(query, tree);
    } catch (const Error& ex) {
        if (ex.code() == ErrorCode::AnnotatorFailure) throw;
        throw Error(ErrorCode::AnnotatorFailure, ex.what());
    } catch (const std::exception& ex) {
        throw Error(ErrorCode::AnnotatorFailure, ex.what());
    }
    return traverse_with_weights(tree, query, weights, cfg);
}

std::string primary_terminal(const ReasoningTrace& trace, const ReasoningTree& tree) {
    if (trace.terminal_nodes.empty()) throw Error(ErrorCode::EmptyScope, "trace has no terminal nodes");
    const std::string* best = nullptr;
    for (const auto& id : trace.terminal_nodes) {
        if (!best) {
            best = &id;
            continue;
        }
        const double w = trace.terminal_weight(id);
        const double bw = trace.terminal_weight(*best);
        const std::size_t size = tree.node(id).devices.size();
        const std::size_t bsize = tree.node(*best).devices.size();
        if (w > bw || (w == bw && (size < bsize || (size == bsize && id < *best)))) best = &id;
    }
    return *best;
}

namespace {

std::vector<std::string> tunable_params(const Device& device) {
    switch (device.kind) {
    case DeviceKind::MosN:
    case DeviceKind::MosP: return {"W", "L"};
    case DeviceKind::Resistor: return {"R"};
    case DeviceKind::Capacitor: return {"C"};
    default: return {};
    }
}

}  // namespace

ScopedVariableSet scope_devices(const std::set<std::string>& scoped, const CircuitNetlist& netlist,
                                const ScopeConfig& cfg) {
    if (!(cfg.span > 1.0)) throw Error(ErrorCode::InvalidConfig, "scope span must exceed 1");
    std::set<std::string> wanted;
    for (const auto& s : scoped) wanted.insert(lower(s));
    ScopedVariableSet set;
    for (const auto& d : netlist.devices) {
        const bool inside = wanted.count(lower(d.name)) > 0;
        if (inside) set.scoped_devices.push_back(d.name);
        for (const auto& p : tunable_params(d)) {
            auto it = d.params.find(p);
            if (it == d.params.end()) continue;
            const std::string name = d.name + "." + p;
            if (inside) {
                set.variables.push_back({name, it->second, it->second / cfg.span, it->second * cfg.span, true});
            } else {
                set.frozen[name] = it->second;
            }
        }
    }
    return set;
}

ScopedVariableSet scope_design_variables(const ReasoningTrace& trace, const ReasoningTree& tree,
                                         const CircuitNetlist& netlist, const ScopeConfig& cfg) {
    if (trace.terminal_nodes.empty()) throw Error(ErrorCode::EmptyScope, "trace has no terminal nodes");
    std::set<std::string> devices;
    if (!cfg.terminals.empty()) {
        // Explicit scope: any tree node, with its whole subtree.
        for (const auto& id : cfg.terminals) {
            if (!tree.contains(id)) throw Error(ErrorCode::EmptyScope, "scope node '" + id + "' is not in the tree");
            for (const auto& sub : tree.subtree(id)) {
                const auto& n = tree.node(sub);
                devices.insert(n.devices.begin(), n.devices.end());
            }
        }
        ScopedVariableSet set = scope_devices(devices, netlist, cfg);
        if (set.variables.empty()) throw Error(ErrorCode::EmptyScope, "scope nodes hold no tunable parameters");
        return set;
    }
    // Dominant terminals: entering weight within epsilon of the strongest.
    std::set<std::string> chosen;
    {
        double best = 0.0;
        for (const auto& t : trace.terminal_nodes) best = std::max(best, trace.terminal_weight(t));
        for (const auto& t : trace.terminal_nodes) {
            if (cfg.all_terminals || trace.terminal_weight(t) >= best - trace.config.epsilon) chosen.insert(t);
        }
    }
    for (const auto& [terminal, nodes] : trace.scoped_subtrees) {
        if (!chosen.count(terminal)) continue;
        for (const auto& id : nodes) {
            const auto& n = tree.node(id);
            devices.insert(n.devices.begin(), n.devices.end());
        }
    }
    ScopedVariableSet set = scope_devices(devices, netlist, cfg);
    if (set.variables.empty()) throw Error(ErrorCode::EmptyScope, "scoped subtrees hold no tunable parameters");
    return set;
}

nlohmann::json to_json(const ReasoningTrace& trace) {
    nlohmann::json weights = nlohmann::json::array();
    for (const auto& [edge, w] : trace.weights.weights) {
        auto r = trace.weights.rationales.find(edge);
        weights.push_back({{"parent", edge.first},
                           {"child", edge.second},
                           {"weight", w},
                           {"rationale", r == trace.weights.rationales.end() ? std::string() : r->second}});
    }
    nlohmann::json cuts = nlohmann::json::object();
    for (const auto& [id, reason] : trace.cut_nodes) cuts[id] = to_string(reason);
    return {{"query", trace.query},
            {"config", {{"tau_stop", trace.config.tau_stop}, {"epsilon", trace.config.epsilon}}},
            {"weights", weights},
            {"visited", trace.visited},
            {"cut_nodes", cuts},
            {"paths", trace.paths},
            {"terminals", trace.terminal_nodes},
            {"scoped_subtrees", trace.scoped_subtrees}};
}

ReasoningTrace trace_from_json(const nlohmann::json& document) {
    ReasoningTrace trace;
    try {
        trace.query = document.at("query").get<std::string>();
        trace.config.tau_stop = document.at("config").at("tau_stop").get<double>();
        trace.config.epsilon = document.at("config").at("epsilon").get<double>();
        for (const auto& w : document.at("weights")) {
            const TreeEdge edge{w.at("parent").get<std::string>(), w.at("child").get<std::string>()};
            trace.weights.weights[edge] = w.at("weight").get<double>();
            trace.weights.rationales[edge] = w.at("rationale").get<std::string>();
        }
        trace.visited = document.at("visited").get<std::vector<std::string>>();
        for (const auto& [id, reason] : document.at("cut_nodes").items()) {
            trace.cut_nodes[id] = cut_reason_from_string(reason.get<std::string>());
        }
        trace.paths = document.at("paths").get<std::vector<std::vector<std::string>>>();
        trace.terminal_nodes = document.at("terminals").get<std::set<std::string>>();
        trace.scoped_subtrees = document.at("scoped_subtrees").get<std::map<std::string, std::vector<std::string>>>();
    } catch (const nlohmann::json::exception& ex) {
        throw Error(ErrorCode::SchemaError, std::string("trace document: ") + ex.what());
    }
    return trace;
}

}  // namespace heart
