// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "heart/decomposition.hpp"
#include "heart/netlist.hpp"

#include <nlohmann/json_fwd.hpp>

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace heart {

class AnnotatorPort;

struct FeedbackLoop {
    std::string loop_id;
    std::vector<std::string> members;  // sibling node ids, >= 2
    std::string polarity_hint;

    bool operator==(const FeedbackLoop&) const = default;
};

struct TreeNode {
    std::string id;
    std::optional<std::string> parent;
    std::vector<std::string> children;
    std::vector<std::string> devices;  // netlist fragment, netlist order
    std::string role;
    std::string description;
    std::string hint;  // structural role hint for leaves (from decomposition)
    PortSets ports;
    std::vector<FeedbackLoop> loops;

    bool is_leaf() const { return children.empty(); }
    bool operator==(const TreeNode&) const = default;
};

// Hierarchical circuit reasoning tree. Nodes are stored root-first in
// breadth-first order; `index` maps id -> position.
struct ReasoningTree {
    std::string root;
    std::vector<TreeNode> nodes;
    std::map<std::string, std::size_t> index;
    CircuitNetlist source_netlist;  // annotated
    std::size_t annotation_failures = 0;

    const TreeNode& node(const std::string& id) const;
    TreeNode& node(const std::string& id);
    bool contains(const std::string& id) const { return index.count(id) > 0; }
    // Number of nodes on the longest root-to-leaf chain (a lone root has depth 1).
    std::size_t depth() const;
    // Ids in post-order (children before parents, children in stored order).
    std::vector<std::string> post_order() const;
    // Node plus all descendants.
    std::vector<std::string> subtree(const std::string& id) const;
    void reindex();
};

// Decides which leaves become siblings under an intermediate stage node.
class GroupingPolicy {
public:
    virtual ~GroupingPolicy() = default;
    // Clusters of leaf indices. Clusters of size one attach to the root.
    virtual std::vector<std::vector<std::size_t>> group(const std::vector<Subcircuit>& leaves,
                                                        const CircuitNetlist& netlist) const = 0;
};

// Leaves sharing at least one non-supply net become siblings under a stage
// node. When one cluster spans every leaf, leaves attach to the root directly.
class NetAdjacencyGrouping : public GroupingPolicy {
public:
    std::vector<std::vector<std::size_t>> group(const std::vector<Subcircuit>& leaves,
                                                const CircuitNetlist& netlist) const override;
};

// Every leaf directly under the root.
class FlatGrouping : public GroupingPolicy {
public:
    std::vector<std::vector<std::size_t>> group(const std::vector<Subcircuit>& leaves,
                                                const CircuitNetlist& netlist) const override;
};

ReasoningTree build_tree(const std::vector<Subcircuit>& subcircuits, const CircuitNetlist& netlist,
                         const AnnotatorPort& annotator, const GroupingPolicy& grouping);

ReasoningTree build_tree(const std::vector<Subcircuit>& subcircuits, const CircuitNetlist& netlist,
                         const AnnotatorPort& annotator);

// Post-order annotation: roles, descriptions, synthesized ports, sibling loops.
ReasoningTree consolidate_bottom_up(ReasoningTree tree, const AnnotatorPort& annotator);

// Signal/supply ports of a device set: supply nets touched, plus non-supply
// nets that are declared signal ports or reach devices outside the set.
PortSets boundary_ports(const std::vector<std::string>& devices, const CircuitNetlist& netlist);

// Throws InvariantViolation describing the first broken invariant.
void validate_tree(const ReasoningTree& tree);

nlohmann::json save_tree(const ReasoningTree& tree);
ReasoningTree load_tree(const nlohmann::json& document);

std::string render_tree(const ReasoningTree& tree);

}  // namespace heart
