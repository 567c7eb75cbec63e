// SPDX-License-Identifier: Apache-2.0
#include "heart/bipartite.hpp"

#include <nlohmann/json.hpp>

namespace heart {

std::size_t BipartiteGraph::net_index(std::string_view name) const {
    for (std::size_t i = 0; i < net_nodes.size(); ++i) {
        if (iequals(net_nodes[i], name)) return i;
    }
    return std::string::npos;
}

std::size_t BipartiteGraph::device_index(std::string_view name) const {
    for (std::size_t i = 0; i < device_nodes.size(); ++i) {
        if (iequals(device_nodes[i], name)) return i;
    }
    return std::string::npos;
}

std::vector<std::vector<std::size_t>> BipartiteGraph::device_adjacency() const {
    std::vector<std::vector<std::size_t>> adj(device_nodes.size());
    for (std::size_t e = 0; e < edges.size(); ++e) adj[edges[e].device].push_back(e);
    return adj;
}

std::vector<std::vector<std::size_t>> BipartiteGraph::net_adjacency() const {
    std::vector<std::vector<std::size_t>> adj(net_nodes.size());
    for (std::size_t e = 0; e < edges.size(); ++e) adj[edges[e].net].push_back(e);
    return adj;
}

BipartiteGraph build_bipartite(const CircuitNetlist& netlist) {
    BipartiteGraph g;
    for (const auto& net : netlist.nets) {
        g.net_nodes.push_back(net.name);
        g.net_roles.push_back(net.role);
    }
    for (std::size_t d = 0; d < netlist.devices.size(); ++d) {
        const auto& device = netlist.devices[d];
        g.device_nodes.push_back(device.name);
        g.device_kinds.push_back(device.kind);
        for (const auto& t : device.terminals) {
            g.edges.push_back({d, t.label, g.net_index(t.net)});
        }
    }
    return g;
}

nlohmann::json to_json(const BipartiteGraph& graph) {
    nlohmann::json nodes = nlohmann::json::array();
    for (std::size_t i = 0; i < graph.device_nodes.size(); ++i) {
        nodes.push_back({{"id", graph.device_nodes[i]}, {"type", "device"}, {"kind", to_string(graph.device_kinds[i])}});
    }
    for (std::size_t i = 0; i < graph.net_nodes.size(); ++i) {
        nodes.push_back({{"id", graph.net_nodes[i]}, {"type", "net"}, {"role", to_string(graph.net_roles[i])}});
    }
    nlohmann::json edges = nlohmann::json::array();
    for (const auto& e : graph.edges) {
        edges.push_back(nlohmann::json::array({graph.device_nodes[e.device], e.terminal, graph.net_nodes[e.net]}));
    }
    return {{"nodes", nodes}, {"edges", edges}};
}

}  // namespace heart
