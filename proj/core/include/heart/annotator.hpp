// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "heart/decomposition.hpp"
#include "heart/netlist.hpp"

#include <nlohmann/json.hpp>

#include <memory>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace heart {

struct ReasoningTree;
struct EdgeWeights;
struct RetrievalQuery;

// What an annotator sees about the whole design. The digest is a bounded
// summary; the full netlist is always attached as well.
struct GlobalContext {
    const CircuitNetlist* netlist = nullptr;
    std::string digest;
};

GlobalContext make_global_context(const CircuitNetlist& netlist);

// One-line view of a child node handed to its parent's annotation.
struct ChildSummary {
    std::string id;
    std::string role;
    std::string summary;
    std::vector<std::string> devices;
    std::set<std::string> drain_nets;  // non-supply nets driven by MOS drains
    std::set<std::string> gate_nets;   // non-supply nets sensed by MOS gates
};

struct FragmentInfo {
    std::string node_id;
    std::vector<Device> devices;
    PortSets ports;
    std::string role_hint;
    std::vector<ChildSummary> children;  // empty for leaves
};

struct RoleAnnotation {
    std::string role;
    std::string description;
};

struct LoopAnnotation {
    std::vector<std::string> members;  // child ids
    std::string polarity_hint;
};

// The reasoning backend. Deterministic implementations must be pure; every
// implementation must honour the output schemas (weights in [0,1], non-empty
// rationales, non-empty roles).
class AnnotatorPort {
public:
    virtual ~AnnotatorPort() = default;

    virtual RoleAnnotation classify_role(const FragmentInfo& fragment, const GlobalContext& global) const = 0;
    virtual std::vector<LoopAnnotation> detect_loops(const std::vector<ChildSummary>& children,
                                                     const GlobalContext& global) const = 0;
    virtual EdgeWeights weigh_edges(std::string_view query, const ReasoningTree& tree) const = 0;
    virtual RetrievalQuery parse_query(std::string_view query, const std::vector<std::string>& metrics) const = 0;
};

// Structural rule table: differential pair, current mirror, cascode, inverter,
// comparator latch, R/C DAC banks, oscillator cores, bias networks. Edge
// weights come from query/role token overlap with a small synonym table.
class RuleAnnotator : public AnnotatorPort {
public:
    RoleAnnotation classify_role(const FragmentInfo& fragment, const GlobalContext& global) const override;
    std::vector<LoopAnnotation> detect_loops(const std::vector<ChildSummary>& children,
                                             const GlobalContext& global) const override;
    EdgeWeights weigh_edges(std::string_view query, const ReasoningTree& tree) const override;
    RetrievalQuery parse_query(std::string_view query, const std::vector<std::string>& metrics) const override;
};

struct HttpAnnotatorConfig {
    std::string endpoint;  // http://host:port/path
    int timeout_ms = 30000;
    int retries = 2;
};

// Posts {"op": ..., "payload": ...} to an HTTP endpoint and reads {"result": ...}.
class HttpAnnotator : public AnnotatorPort {
public:
    explicit HttpAnnotator(HttpAnnotatorConfig config);

    RoleAnnotation classify_role(const FragmentInfo& fragment, const GlobalContext& global) const override;
    std::vector<LoopAnnotation> detect_loops(const std::vector<ChildSummary>& children,
                                             const GlobalContext& global) const override;
    EdgeWeights weigh_edges(std::string_view query, const ReasoningTree& tree) const override;
    RetrievalQuery parse_query(std::string_view query, const std::vector<std::string>& metrics) const override;

    // Raw call, exposed for contract tests.
    nlohmann::json call(const std::string& op, const nlohmann::json& payload) const;

private:
    HttpAnnotatorConfig config_;
    std::string host_;
    int port_ = 80;
    std::string path_;
};

// "rule" or "external:<endpoint>".
std::unique_ptr<AnnotatorPort> make_annotator(const std::string& spec, int timeout_ms = 30000, int retries = 2);

// Lower-case word tokens with stop words removed.
std::vector<std::string> keyword_tokens(std::string_view text);

nlohmann::json to_json(const FragmentInfo& fragment);
nlohmann::json to_json(const ChildSummary& child);

}  // namespace heart
