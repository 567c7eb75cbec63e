// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "heart/netlist.hpp"

#include <nlohmann/json_fwd.hpp>

#include <map>
#include <string>
#include <utility>
#include <vector>

namespace heart {

struct ReasoningTree;

// Canonical circuit-graph edge: (device kind, terminal label, net class).
// Net classes are lower-cased net names.
struct EditDistanceResult {
    std::size_t distance = 0;
    // ref device -> new device for every matched pair.
    std::map<std::string, std::string> correspondence;
    std::size_t ref_edges = 0;
    std::size_t new_edges = 0;
    bool approximate = false;
};

// Minimum number of edge insertions plus deletions over kind-preserving
// partial device correspondences. A matched pair costs two per terminal
// whose net differs; an unmatched device costs its edge count. Solved
// exactly as a rectangular assignment problem; among minima, same-name
// pairs are preferred.
EditDistanceResult circuit_edit_distance(const CircuitNetlist& ref, const CircuitNetlist& candidate);

struct SensitivityConfig {
    double k = 3.0;

    void validate() const;  // InvalidConfig
};

struct VariableValue {
    std::string name;  // device.param
    double value = 0.0;
};

struct VariableDeviation {
    std::string name;
    double reference = 0.0;
    double value = 0.0;
    double term = 1.0;  // exp(-k * min(1, |log10(x/x0)|))
};

struct DvrsResult {
    double value = 1.0;
    std::vector<VariableDeviation> per_variable;
};

// Mean capped decade deviation over variables present in both lists.
// Throws NoMatchedVariables, NonPositiveValue.
DvrsResult dvrs(const std::vector<VariableValue>& reference, const std::vector<VariableValue>& candidate,
                const SensitivityConfig& cfg = {});

// 1 - d / |E0|. Throws EmptyReference when |E0| = 0.
double trs(std::size_t edit_distance, std::size_t ref_edges);
double trs(const CircuitNetlist& ref, const CircuitNetlist& candidate);

struct RetentionReport {
    double trs = 1.0;
    double trs_floored = 1.0;  // max(0, trs)
    double dvrs = 1.0;
    double pckri = 1.0;        // trs * dvrs
    std::size_t d_edit = 0;
    std::size_t ref_edge_count = 0;
    bool approximate = false;
    std::vector<VariableDeviation> per_variable;
    std::map<std::string, std::string> correspondence;
};

// Tunable values (W, L, R, C) of a netlist as device.param variables.
std::vector<VariableValue> design_variables(const CircuitNetlist& netlist);

// DVRS runs over variables of devices matched to a same-named device.
RetentionReport pckri(const CircuitNetlist& ref, const CircuitNetlist& candidate, const SensitivityConfig& cfg = {});

nlohmann::json to_json(const RetentionReport& report);

// Reasoning annotation bundle compared by the A1-A4 scorer.
struct LoopLabel {
    std::vector<std::string> devices;
    std::string purpose;
};

struct AnnotationBundle {
    std::string circuit_class;
    std::vector<std::vector<std::string>> partition;
    bool kcl_compliant = true;
    std::vector<LoopLabel> loops;
    std::vector<std::string> keywords;
};

struct AccuracyScore {
    double a1 = 0.0;
    double a2 = 0.0;
    double a3 = 0.0;
    double a4 = 0.0;
    double overall = 0.0;
};

AccuracyScore score_reasoning(const AnnotationBundle& predicted, const AnnotationBundle& gold);

// Predicted bundle from a consolidated tree: root role as class, leaves as
// the partition, loops as device unions with their hints, and every role and
// description as keyword text.
AnnotationBundle bundle_from_tree(const ReasoningTree& tree, bool kcl_compliant);

AnnotationBundle bundle_from_json(const nlohmann::json& document);  // SchemaError
nlohmann::json to_json(const AnnotationBundle& bundle);
nlohmann::json to_json(const AccuracyScore& score);

}  // namespace heart
