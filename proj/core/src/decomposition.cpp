// SPDX-License-Identifier: Apache-2.0
#include "heart/decomposition.hpp"

#include "heart/annotator.hpp"
#include "heart/error.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <deque>
#include <limits>
#include <map>
#include <numeric>

namespace heart {

std::vector<std::string> conduction_terminals(DeviceKind kind) {
    switch (kind) {
    case DeviceKind::MosN:
    case DeviceKind::MosP: return {"D", "S"};
    case DeviceKind::Capacitor: return {};
    case DeviceKind::Resistor:
    case DeviceKind::Inductor:
    case DeviceKind::VSource:
    case DeviceKind::ISource: return {"T1", "T2"};
    }
    return {};
}

std::string_view to_string(SubcircuitKind kind) {
    return kind == SubcircuitKind::DcAlive ? "DC_ALIVE" : "AC_RESIDUAL";
}

namespace {

bool is_conductive(DeviceKind kind, const std::string& terminal) {
    const auto terms = conduction_terminals(kind);
    return std::find(terms.begin(), terms.end(), terminal) != terms.end();
}

// Conduction nets (two net indices) per device; npos for capacitors.
struct ConductionEnds {
    std::size_t a = std::string::npos;
    std::size_t b = std::string::npos;
    bool valid() const { return a != std::string::npos && b != std::string::npos; }
};

std::vector<ConductionEnds> conduction_ends(const BipartiteGraph& graph) {
    std::vector<ConductionEnds> ends(graph.device_nodes.size());
    for (const auto& e : graph.edges) {
        if (!is_conductive(graph.device_kinds[e.device], e.terminal)) continue;
        auto& end = ends[e.device];
        if (end.a == std::string::npos) end.a = e.net;
        else end.b = e.net;
    }
    return ends;
}

class DisjointSets {
public:
    explicit DisjointSets(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), 0); }
    std::size_t find(std::size_t x) {
        while (parent_[x] != x) x = parent_[x] = parent_[parent_[x]];
        return x;
    }
    void unite(std::size_t a, std::size_t b) {
        a = find(a);
        b = find(b);
        if (a != b) parent_[std::max(a, b)] = std::min(a, b);
    }

private:
    std::vector<std::size_t> parent_;
};

// Unit-capacity max flow (Edmonds-Karp) on a small graph.
class FlowNetwork {
public:
    explicit FlowNetwork(std::size_t n) : adj_(n) {}

    void add_arc(std::size_t from, std::size_t to, int capacity) {
        adj_[from].push_back(arcs_.size());
        arcs_.push_back({to, capacity});
        adj_[to].push_back(arcs_.size());
        arcs_.push_back({from, 0});
    }

    int max_flow(std::size_t source, std::size_t sink, int limit) {
        int flow = 0;
        while (flow < limit) {
            std::vector<std::size_t> via(adj_.size(), std::numeric_limits<std::size_t>::max());
            std::deque<std::size_t> queue{source};
            std::vector<bool> seen(adj_.size(), false);
            seen[source] = true;
            while (!queue.empty() && !seen[sink]) {
                const std::size_t v = queue.front();
                queue.pop_front();
                for (std::size_t id : adj_[v]) {
                    const Arc& arc = arcs_[id];
                    if (arc.capacity > 0 && !seen[arc.to]) {
                        seen[arc.to] = true;
                        via[arc.to] = id;
                        queue.push_back(arc.to);
                    }
                }
            }
            if (!seen[sink]) break;
            for (std::size_t v = sink; v != source;) {
                const std::size_t id = via[v];
                arcs_[id].capacity -= 1;
                arcs_[id ^ 1].capacity += 1;
                v = arcs_[id ^ 1].to;
            }
            ++flow;
        }
        return flow;
    }

private:
    struct Arc {
        std::size_t to;
        int capacity;
    };
    std::vector<std::vector<std::size_t>> adj_;
    std::vector<Arc> arcs_;
};

// True when `device` lies on a simple high-rail -> low-rail path whose
// interior nets are not rails: two vertex-disjoint paths from its ends, one to
// the merged high rail and one to the merged low rail, avoiding the device.
bool has_disjoint_rail_paths(const BipartiteGraph& graph, const std::vector<ConductionEnds>& ends,
                             const RailConfig& rails, std::size_t device) {
    const std::size_t nets = graph.net_nodes.size();
    // Merged vertex ids: nets keep their index; high rails -> nets, low -> nets+1.
    const std::size_t high = nets;
    const std::size_t low = nets + 1;
    auto merged = [&](std::size_t net) {
        if (rails.is_high(graph.net_nodes[net])) return high;
        if (rails.is_low(graph.net_nodes[net])) return low;
        return net;
    };
    const std::size_t a = merged(ends[device].a);
    const std::size_t b = merged(ends[device].b);
    if (a == b) return false;

    const std::size_t vertices = nets + 2;
    const std::size_t source = 2 * vertices;
    const std::size_t sink = source + 1;
    FlowNetwork flow(sink + 1);
    auto in = [](std::size_t v) { return 2 * v; };
    auto out = [](std::size_t v) { return 2 * v + 1; };
    for (std::size_t v = 0; v < vertices; ++v) flow.add_arc(in(v), out(v), 1);
    for (std::size_t d = 0; d < ends.size(); ++d) {
        if (d == device || !ends[d].valid()) continue;
        const std::size_t x = merged(ends[d].a);
        const std::size_t y = merged(ends[d].b);
        if (x == y) continue;
        flow.add_arc(out(x), in(y), 1);
        flow.add_arc(out(y), in(x), 1);
    }
    flow.add_arc(source, in(a), 1);
    flow.add_arc(source, in(b), 1);
    flow.add_arc(out(high), sink, 1);
    flow.add_arc(out(low), sink, 1);
    return flow.max_flow(source, sink, 2) == 2;
}

std::string lowest_name(const std::vector<std::string>& names) {
    return lower(*std::min_element(names.begin(), names.end(),
                                   [](const std::string& x, const std::string& y) { return lower(x) < lower(y); }));
}

std::vector<Subcircuit> components_to_subcircuits(const BipartiteGraph& graph, DisjointSets& sets,
                                                  const std::vector<bool>& member, SubcircuitKind kind,
                                                  const std::string& prefix) {
    std::map<std::size_t, std::vector<std::string>> groups;
    for (std::size_t d = 0; d < member.size(); ++d) {
        if (member[d]) groups[sets.find(d)].push_back(graph.device_nodes[d]);
    }
    std::vector<std::vector<std::string>> ordered;
    for (auto& [root, names] : groups) ordered.push_back(std::move(names));
    std::sort(ordered.begin(), ordered.end(),
              [](const auto& x, const auto& y) { return lowest_name(x) < lowest_name(y); });
    std::vector<Subcircuit> subs;
    for (std::size_t k = 0; k < ordered.size(); ++k) {
        Subcircuit sub;
        sub.subcircuit_id = prefix + std::to_string(k);
        sub.devices = std::move(ordered[k]);
        sub.kind = kind;
        subs.push_back(std::move(sub));
    }
    return subs;
}

}  // namespace

DCGraph build_dc_graph(const BipartiteGraph& graph) {
    DCGraph dc;
    dc.base = &graph;
    std::vector<bool> device_used(graph.device_nodes.size(), false);
    std::vector<bool> net_used(graph.net_nodes.size(), false);
    for (std::size_t e = 0; e < graph.edges.size(); ++e) {
        const auto& edge = graph.edges[e];
        if (!is_conductive(graph.device_kinds[edge.device], edge.terminal)) continue;
        dc.retained_edges.push_back(e);
        device_used[edge.device] = true;
        net_used[edge.net] = true;
    }
    for (std::size_t d = 0; d < device_used.size(); ++d) {
        if (!device_used[d]) dc.isolated_removed.insert(graph.device_nodes[d]);
    }
    for (std::size_t n = 0; n < net_used.size(); ++n) {
        if (!net_used[n]) dc.isolated_removed.insert(graph.net_nodes[n]);
    }
    return dc;
}

ReachabilitySets compute_reachability(const DCGraph& dc, const RailConfig& rails) {
    const BipartiteGraph& graph = *dc.base;
    std::vector<std::vector<std::size_t>> net_to_devices(graph.net_nodes.size());
    std::vector<std::vector<std::size_t>> device_to_nets(graph.device_nodes.size());
    for (std::size_t e : dc.retained_edges) {
        net_to_devices[graph.edges[e].net].push_back(graph.edges[e].device);
        device_to_nets[graph.edges[e].device].push_back(graph.edges[e].net);
    }
    auto bfs = [&](auto is_source) {
        std::set<std::string> reached;
        std::deque<std::size_t> queue;
        std::vector<bool> seen(graph.net_nodes.size(), false);
        for (std::size_t n = 0; n < graph.net_nodes.size(); ++n) {
            if (is_source(graph.net_nodes[n]) && !net_to_devices[n].empty()) {
                seen[n] = true;
                queue.push_back(n);
                reached.insert(graph.net_nodes[n]);
            }
        }
        while (!queue.empty()) {
            const std::size_t n = queue.front();
            queue.pop_front();
            for (std::size_t d : net_to_devices[n]) {
                for (std::size_t m : device_to_nets[d]) {
                    if (seen[m]) continue;
                    seen[m] = true;
                    if (rails.is_supply(graph.net_nodes[m])) continue;
                    reached.insert(graph.net_nodes[m]);
                    queue.push_back(m);
                }
            }
        }
        return reached;
    };
    ReachabilitySets sets;
    sets.r_vdd = bfs([&](const std::string& net) { return rails.is_high(net); });
    sets.r_gnd = bfs([&](const std::string& net) { return rails.is_low(net); });
    return sets;
}

std::set<std::string> dc_alive_devices(const BipartiteGraph& graph, const RailConfig& rails) {
    const DCGraph dc = build_dc_graph(graph);
    const ReachabilitySets reach = compute_reachability(dc, rails);
    const auto ends = conduction_ends(graph);
    std::set<std::string> alive;
    for (std::size_t d = 0; d < ends.size(); ++d) {
        if (!ends[d].valid()) continue;
        const std::string& n1 = graph.net_nodes[ends[d].a];
        const std::string& n2 = graph.net_nodes[ends[d].b];
        const bool candidate = (reach.r_vdd.count(n1) && reach.r_gnd.count(n2)) ||
                               (reach.r_vdd.count(n2) && reach.r_gnd.count(n1));
        if (candidate && has_disjoint_rail_paths(graph, ends, rails, d)) alive.insert(graph.device_nodes[d]);
    }
    return alive;
}

std::vector<Subcircuit> extract_dc_subcircuits(const BipartiteGraph& graph, const RailConfig& rails) {
    const bool has_high = std::any_of(graph.net_nodes.begin(), graph.net_nodes.end(),
                                      [&](const std::string& n) { return rails.is_high(n); });
    const bool has_low = std::any_of(graph.net_nodes.begin(), graph.net_nodes.end(),
                                     [&](const std::string& n) { return rails.is_low(n); });
    if (!has_high && !has_low) throw Error(ErrorCode::MissingSupply, "graph has no supply rail net");

    const std::set<std::string> alive = dc_alive_devices(graph, rails);
    std::vector<bool> member(graph.device_nodes.size(), false);
    for (std::size_t d = 0; d < member.size(); ++d) member[d] = alive.count(graph.device_nodes[d]) > 0;

    DisjointSets sets(graph.device_nodes.size());
    std::vector<std::size_t> first_on_net(graph.net_nodes.size(), std::string::npos);
    for (const auto& e : graph.edges) {
        if (!member[e.device] || !is_conductive(graph.device_kinds[e.device], e.terminal)) continue;
        if (rails.is_supply(graph.net_nodes[e.net])) continue;
        if (first_on_net[e.net] == std::string::npos) first_on_net[e.net] = e.device;
        else sets.unite(first_on_net[e.net], e.device);
    }
    return components_to_subcircuits(graph, sets, member, SubcircuitKind::DcAlive, "dc_");
}

std::vector<Subcircuit> process_residual_and_ac(const BipartiteGraph& graph, const std::vector<Subcircuit>& dc) {
    std::vector<bool> member(graph.device_nodes.size(), true);
    for (const auto& sub : dc) {
        for (const auto& name : sub.devices) member[graph.device_index(name)] = false;
    }
    DisjointSets sets(graph.device_nodes.size());
    std::vector<std::size_t> first_on_net(graph.net_nodes.size(), std::string::npos);
    for (const auto& e : graph.edges) {
        if (!member[e.device] || graph.net_roles[e.net] == NetRole::SupplyPort) continue;
        if (first_on_net[e.net] == std::string::npos) first_on_net[e.net] = e.device;
        else sets.unite(first_on_net[e.net], e.device);
    }
    return components_to_subcircuits(graph, sets, member, SubcircuitKind::AcResidual, "ac_");
}

void annotate_ports(Subcircuit& sub, const CircuitNetlist& netlist, const std::vector<Subcircuit>& all) {
    std::set<std::string> inside(sub.devices.begin(), sub.devices.end());
    std::map<std::string, std::set<std::string>> net_users;  // net -> devices using it
    for (const auto& d : netlist.devices) {
        for (const auto& t : d.terminals) net_users[t.net].insert(d.name);
    }
    std::set<std::string> other_subs;
    for (const auto& other : all) {
        if (other.subcircuit_id == sub.subcircuit_id) continue;
        other_subs.insert(other.devices.begin(), other.devices.end());
    }
    sub.ports = {};
    sub.adjacent_nets.clear();
    for (const auto& name : sub.devices) {
        const Device* d = netlist.find_device(name);
        for (const auto& t : d->terminals) {
            const NetRole role = netlist.role_of(t.net);
            if (role == NetRole::SupplyPort) {
                sub.ports.supply.insert(t.net);
                continue;
            }
            bool used_outside = false;
            bool used_by_other_sub = false;
            for (const auto& user : net_users[t.net]) {
                if (inside.count(user)) continue;
                used_outside = true;
                if (other_subs.count(user)) used_by_other_sub = true;
            }
            if (role == NetRole::SignalPort || used_outside) sub.ports.signal.insert(t.net);
            if (used_by_other_sub) sub.adjacent_nets.insert(t.net);
        }
    }
}

DecomposeResult decompose(const CircuitNetlist& source, const RailConfig& rails, const AnnotatorPort& annotator) {
    const RailConfig effective = effective_rails(source, rails);
    const CircuitNetlist netlist = annotate_nets(source, effective);
    const BipartiteGraph graph = build_bipartite(netlist);

    DecomposeResult result;
    auto dc = extract_dc_subcircuits(graph, effective);
    auto ac = process_residual_and_ac(graph, dc);
    result.subcircuits = std::move(dc);
    result.subcircuits.insert(result.subcircuits.end(), std::make_move_iterator(ac.begin()),
                              std::make_move_iterator(ac.end()));
    for (auto& sub : result.subcircuits) annotate_ports(sub, netlist, result.subcircuits);

    const GlobalContext global = make_global_context(netlist);
    for (auto& sub : result.subcircuits) {
        FragmentInfo fragment;
        fragment.node_id = sub.subcircuit_id;
        for (const auto& name : sub.devices) fragment.devices.push_back(*netlist.find_device(name));
        fragment.ports = sub.ports;
        try {
            auto annotation = annotator.classify_role(fragment, global);
            sub.role_hint = annotation.role.empty() ? "unclassified" : annotation.role;
        } catch (const std::exception& ex) {
            sub.role_hint = "unclassified";
            result.annotator_failed = true;
            result.annotator_error = Error(ErrorCode::AnnotatorFailure, ex.what()).what();
        }
    }
    return result;
}

std::set<std::string> brute_force_dc_oracle(const CircuitNetlist& netlist, const RailConfig& rails,
                                            std::size_t max_devices) {
    if (netlist.devices.size() > max_devices) {
        throw Error(ErrorCode::TooLarge, std::to_string(netlist.devices.size()) + " devices exceed the oracle cap of " +
                                             std::to_string(max_devices));
    }
    const RailConfig effective = effective_rails(netlist, rails);
    struct Branch {
        std::string device;
        std::string a;
        std::string b;
    };
    std::vector<Branch> branches;
    for (const auto& d : netlist.devices) {
        const auto terms = conduction_terminals(d.kind);
        if (terms.size() != 2) continue;
        branches.push_back({d.name, lower(d.net(terms[0])), lower(d.net(terms[1]))});
    }
    std::set<std::string> alive;
    std::vector<std::string> path_devices;
    std::set<std::string> visited_nets;

    // Depth-first enumeration of every simple path leaving `net`.
    auto walk = [&](auto&& self, const std::string& net) -> void {
        for (const auto& br : branches) {
            if (std::find(path_devices.begin(), path_devices.end(), br.device) != path_devices.end()) continue;
            std::string next;
            if (br.a == net) next = br.b;
            else if (br.b == net) next = br.a;
            else continue;
            if (next == net || visited_nets.count(next)) continue;
            path_devices.push_back(br.device);
            if (effective.is_low(next)) {
                alive.insert(path_devices.begin(), path_devices.end());
            } else if (!effective.is_supply(next)) {
                visited_nets.insert(next);
                self(self, next);
                visited_nets.erase(next);
            }
            path_devices.pop_back();
        }
    };
    for (const auto& net : netlist.nets) {
        if (!effective.is_high(net.name)) continue;
        visited_nets = {lower(net.name)};
        walk(walk, lower(net.name));
    }
    return alive;
}

bool kcl_compliant_split(const CircuitNetlist& netlist, const std::vector<std::vector<std::string>>& partition,
                         const RailConfig& rails) {
    std::map<std::string, std::size_t> group_of;
    for (std::size_t g = 0; g < partition.size(); ++g) {
        for (const auto& d : partition[g]) {
            if (!netlist.find_device(d) || !group_of.emplace(lower(d), g).second) return false;
        }
    }
    if (group_of.size() != netlist.devices.size()) return false;
    const RailConfig effective = effective_rails(netlist, rails);
    const auto alive = dc_alive_devices(build_bipartite(annotate_nets(netlist, effective)), effective);
    std::map<std::string, std::size_t> net_group;
    for (const auto& d : netlist.devices) {
        if (!alive.count(d.name)) continue;
        const std::size_t g = group_of.at(lower(d.name));
        for (const auto& label : conduction_terminals(d.kind)) {
            const std::string net = lower(d.net(label));
            if (effective.is_supply(net)) continue;
            auto [it, fresh] = net_group.emplace(net, g);
            if (!fresh && it->second != g) return false;
        }
    }
    return true;
}

nlohmann::json to_json(const Subcircuit& sub) {
    return {
        {"id", sub.subcircuit_id},
        {"kind", to_string(sub.kind)},
        {"devices", sub.devices},
        {"ports", {{"signal", sub.ports.signal}, {"supply", sub.ports.supply}}},
        {"role_hint", sub.role_hint},
        {"adjacent_nets", sub.adjacent_nets},
    };
}

nlohmann::json decomposition_report(const CircuitNetlist& netlist, const DecomposeResult& result) {
    nlohmann::json subs = nlohmann::json::array();
    for (const auto& sub : result.subcircuits) subs.push_back(to_json(sub));
    nlohmann::json report{{"netlist", netlist.name}, {"subcircuits", subs}};
    if (result.annotator_failed) report["annotator_error"] = result.annotator_error;
    return report;
}

}  // namespace heart
