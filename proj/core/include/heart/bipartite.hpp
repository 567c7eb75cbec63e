// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "heart/netlist.hpp"

#include <nlohmann/json_fwd.hpp>

#include <cstddef>
#include <string>
#include <vector>

namespace heart {

// Device-net graph G = (V_D, V_N, E). Edges only join a device node to a net
// node; every (device, terminal) pair contributes exactly one edge.
struct BipartiteGraph {
    struct Edge {
        std::size_t device = 0;  // index into device_nodes
        std::string terminal;
        std::size_t net = 0;  // index into net_nodes

        bool operator==(const Edge&) const = default;
    };

    std::vector<std::string> device_nodes;
    std::vector<DeviceKind> device_kinds;
    std::vector<std::string> net_nodes;
    std::vector<NetRole> net_roles;
    std::vector<Edge> edges;

    std::size_t net_index(std::string_view name) const;  // npos when absent
    std::size_t device_index(std::string_view name) const;

    // Edge indices incident to a device / net.
    std::vector<std::vector<std::size_t>> device_adjacency() const;
    std::vector<std::vector<std::size_t>> net_adjacency() const;
};

BipartiteGraph build_bipartite(const CircuitNetlist& netlist);

nlohmann::json to_json(const BipartiteGraph& graph);

}  // namespace heart
