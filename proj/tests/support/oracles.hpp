// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "heart/netlist.hpp"
#include "heart/topo_db.hpp"

#include <cstddef>
#include <random>
#include <set>
#include <string>
#include <vector>

namespace heart::testing {

// Devices on at least one simple high-rail to low-rail path of two-terminal
// conduction branches that does not pass through a supply net on the way.
std::set<std::string> dc_path_oracle(const CircuitNetlist& netlist, const RailConfig& rails);

// Edit distance by enumerating every kind-preserving partial injection.
std::size_t edit_distance_oracle(const CircuitNetlist& ref, const CircuitNetlist& candidate);

// Rows passing every strict constraint, in table order.
std::vector<std::string> feasible_oracle(const KnowledgeTable& table, const RetrievalQuery& query, int window);

// Best feasible row by score (ties within 1e-9 relative), then total rank sum,
// then id. Empty when nothing is feasible.
std::string retrieval_argmin_oracle(const KnowledgeTable& table, const RetrievalQuery& query, int window);

KnowledgeTable random_table(std::mt19937_64& rng, std::size_t max_rows = 12, std::size_t max_metrics = 6);
// Normalized query over the table's metrics; priors are drawn from the ranks.
RetrievalQuery random_query(std::mt19937_64& rng, const KnowledgeTable& table);

// Random small netlist with MOS, R and C devices on a handful of nets,
// including vdd and gnd.
CircuitNetlist random_netlist(std::mt19937_64& rng, std::size_t devices, std::size_t nets);

}  // namespace heart::testing
