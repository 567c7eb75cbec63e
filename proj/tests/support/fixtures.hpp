// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "heart/netlist.hpp"
#include "heart/tree.hpp"
#include "heart/traversal.hpp"

#include <string>
#include <utility>
#include <vector>

namespace heart::testing {

std::string data_path(const std::string& relative);
std::string read_text(const std::string& path);

// Bundled circuit names (data/circuits/<name>.sp), sorted.
std::vector<std::string> corpus_names();
// Parsed and net-annotated with the default rails plus PININFO.
CircuitNetlist load_circuit(const std::string& name);

// Bare tree from (id, parent) pairs in breadth-first order. Leaves get one
// device named after the node; parents get the union of their children.
ReasoningTree make_tree(const std::vector<std::pair<std::string, std::string>>& nodes);

// Weights keyed by child id (each child has a unique parent).
EdgeWeights make_weights(const ReasoningTree& tree, const std::vector<std::pair<std::string, double>>& by_child);

// Scratch directory under the system temp dir, emptied on creation.
std::string scratch_dir(const std::string& tag);

}  // namespace heart::testing
