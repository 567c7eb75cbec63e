// SPDX-License-Identifier: Apache-2.0
#include "fixtures.hpp"

#include "heart/error.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

namespace fs = std::filesystem;

namespace heart::testing {

std::string data_path(const std::string& relative) { return std::string(HEART_DATA_DIR) + "/" + relative; }

std::string read_text(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::IoError, "cannot read " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<std::string> corpus_names() {
    std::vector<std::string> out;
    for (const auto& e : fs::directory_iterator(data_path("circuits"))) {
        if (e.path().extension() == ".sp") out.push_back(e.path().stem().string());
    }
    std::sort(out.begin(), out.end());
    return out;
}

CircuitNetlist load_circuit(const std::string& name) {
    const auto nl = parse_netlist_file(data_path("circuits/" + name + ".sp"));
    return annotate_nets(nl, effective_rails(nl, RailConfig{}));
}

ReasoningTree make_tree(const std::vector<std::pair<std::string, std::string>>& nodes) {
    ReasoningTree tree;
    for (const auto& [id, parent] : nodes) {
        TreeNode n;
        n.id = id;
        n.role = "node " + id;
        if (!parent.empty()) n.parent = parent;
        tree.nodes.push_back(n);
    }
    tree.root = tree.nodes.front().id;
    tree.reindex();
    for (const auto& n : tree.nodes) {
        if (n.parent) tree.node(*n.parent).children.push_back(n.id);
    }
    for (const auto& id : tree.post_order()) {
        auto& n = tree.node(id);
        if (n.is_leaf()) {
            n.devices = {"D" + id};
        } else {
            n.devices.clear();
            for (const auto& c : n.children) {
                const auto& cd = tree.node(c).devices;
                n.devices.insert(n.devices.end(), cd.begin(), cd.end());
            }
        }
    }
    return tree;
}

EdgeWeights make_weights(const ReasoningTree& tree, const std::vector<std::pair<std::string, double>>& by_child) {
    EdgeWeights w;
    for (const auto& [child, value] : by_child) {
        const auto& parent = *tree.node(child).parent;
        w.weights[{parent, child}] = value;
        w.rationales[{parent, child}] = "fixture";
    }
    return w;
}

std::string scratch_dir(const std::string& tag) {
    const fs::path p = fs::temp_directory_path() / ("heart-test-" + tag);
    fs::remove_all(p);
    fs::create_directories(p);
    return p.string();
}

}  // namespace heart::testing
