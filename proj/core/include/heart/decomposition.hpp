// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "heart/bipartite.hpp"
#include "heart/netlist.hpp"

#include <nlohmann/json_fwd.hpp>

#include <set>
#include <string>
#include <vector>

namespace heart {

class AnnotatorPort;

// Terminals that carry DC current: MOS D/S; R, L, V, I T1/T2; capacitors none.
std::vector<std::string> conduction_terminals(DeviceKind kind);

// G_DC: the bipartite graph with gate and capacitor edges removed and isolated
// nodes dropped.
struct DCGraph {
    const BipartiteGraph* base = nullptr;
    std::vector<std::size_t> retained_edges;  // indices into base->edges
    std::set<std::string> isolated_removed;   // device and net names
};

DCGraph build_dc_graph(const BipartiteGraph& graph);

// Nets reachable from the high (resp. low) rails through DC-conductive
// terminals, never expanding through a rail net.
struct ReachabilitySets {
    std::set<std::string> r_vdd;
    std::set<std::string> r_gnd;
};

ReachabilitySets compute_reachability(const DCGraph& dc, const RailConfig& rails);

enum class SubcircuitKind { DcAlive, AcResidual };

std::string_view to_string(SubcircuitKind kind);

struct PortSets {
    std::set<std::string> signal;
    std::set<std::string> supply;

    bool operator==(const PortSets&) const = default;
};

struct Subcircuit {
    std::string subcircuit_id;
    std::vector<std::string> devices;  // netlist order
    SubcircuitKind kind = SubcircuitKind::DcAlive;
    std::string role_hint;
    PortSets ports;
    std::set<std::string> adjacent_nets;
};

// Devices carrying DC current between opposite rails. A device passes when its
// conduction nets satisfy the reachability predicate and a pair of
// vertex-disjoint rail paths (one per side) exists around it.
std::set<std::string> dc_alive_devices(const BipartiteGraph& graph, const RailConfig& rails);

// Connected components of DC-alive devices joined through shared non-supply
// nets on conduction terminals, tagged DC_ALIVE with ids dc_<k>.
std::vector<Subcircuit> extract_dc_subcircuits(const BipartiteGraph& graph, const RailConfig& rails);

// Remaining devices grouped by full bipartite connectivity over non-supply
// nets (gate and capacitor edges included), tagged AC_RESIDUAL with ids ac_<k>.
std::vector<Subcircuit> process_residual_and_ac(const BipartiteGraph& graph, const std::vector<Subcircuit>& dc);

struct DecomposeResult {
    std::vector<Subcircuit> subcircuits;
    bool annotator_failed = false;
    std::string annotator_error;
};

// End-to-end decomposition: structure from the graph, ports from net roles,
// role_hint from the annotator (falls back to "unclassified" on failure).
DecomposeResult decompose(const CircuitNetlist& netlist, const RailConfig& rails, const AnnotatorPort& annotator);

// Exhaustive simple-path enumeration between opposite rails through
// DC-conductive terminals. Throws TooLarge above `max_devices`.
std::set<std::string> brute_force_dc_oracle(const CircuitNetlist& netlist, const RailConfig& rails,
                                            std::size_t max_devices = 20);

// True when `partition` covers every device exactly once and no non-supply
// net carries DC-alive conduction terminals from two different groups, so the
// currents of each group balance at its own nets.
bool kcl_compliant_split(const CircuitNetlist& netlist, const std::vector<std::vector<std::string>>& partition,
                         const RailConfig& rails);

// Fills ports and adjacent_nets of `sub` from the annotated netlist and the
// device sets of all subcircuits.
void annotate_ports(Subcircuit& sub, const CircuitNetlist& netlist, const std::vector<Subcircuit>& all);

nlohmann::json to_json(const Subcircuit& sub);
nlohmann::json decomposition_report(const CircuitNetlist& netlist, const DecomposeResult& result);

}  // namespace heart
