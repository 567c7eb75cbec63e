// SPDX-License-Identifier: Apache-2.0
#include "heart/tree.hpp"

#include "heart/annotator.hpp"
#include "heart/error.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <deque>
#include <numeric>
#include <sstream>

namespace heart {

const TreeNode& ReasoningTree::node(const std::string& id) const {
    auto it = index.find(id);
    if (it == index.end()) throw Error(ErrorCode::InvariantViolation, "unknown tree node '" + id + "'");
    return nodes[it->second];
}

TreeNode& ReasoningTree::node(const std::string& id) {
    return const_cast<TreeNode&>(static_cast<const ReasoningTree&>(*this).node(id));
}

std::size_t ReasoningTree::depth() const {
    if (nodes.empty()) return 0;
    std::size_t best = 0;
    std::deque<std::pair<std::string, std::size_t>> queue{{root, 1}};
    while (!queue.empty()) {
        auto [id, d] = queue.front();
        queue.pop_front();
        best = std::max(best, d);
        for (const auto& c : node(id).children) queue.emplace_back(c, d + 1);
    }
    return best;
}

std::vector<std::string> ReasoningTree::post_order() const {
    std::vector<std::string> out;
    if (nodes.empty()) return out;
    auto visit = [&](auto&& self, const std::string& id) -> void {
        for (const auto& c : node(id).children) self(self, c);
        out.push_back(id);
    };
    visit(visit, root);
    return out;
}

std::vector<std::string> ReasoningTree::subtree(const std::string& id) const {
    std::vector<std::string> out;
    std::deque<std::string> queue{id};
    while (!queue.empty()) {
        std::string cur = queue.front();
        queue.pop_front();
        out.push_back(cur);
        for (const auto& c : node(cur).children) queue.push_back(c);
    }
    return out;
}

void ReasoningTree::reindex() {
    index.clear();
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        if (!index.emplace(nodes[i].id, i).second) {
            throw Error(ErrorCode::InvariantViolation, "duplicate node id '" + nodes[i].id + "'");
        }
    }
}

namespace {

std::vector<std::vector<std::size_t>> singletons(std::size_t n) {
    std::vector<std::vector<std::size_t>> out;
    for (std::size_t i = 0; i < n; ++i) out.push_back({i});
    return out;
}

std::vector<std::string> in_netlist_order(const std::set<std::string>& names, const CircuitNetlist& netlist) {
    std::vector<std::string> out;
    for (const auto& d : netlist.devices) {
        if (names.count(d.name)) out.push_back(d.name);
    }
    return out;
}

ChildSummary summarize(const TreeNode& child, const CircuitNetlist& netlist) {
    ChildSummary s;
    s.id = child.id;
    s.role = child.role;
    s.summary = child.description.size() > 160 ? child.description.substr(0, 160) : child.description;
    s.devices = child.devices;
    for (const auto& name : child.devices) {
        const Device* d = netlist.find_device(name);
        if (!d || !is_mos(d->kind)) continue;
        if (netlist.role_of(d->net("D")) != NetRole::SupplyPort) s.drain_nets.insert(d->net("D"));
        if (netlist.role_of(d->net("G")) != NetRole::SupplyPort) s.gate_nets.insert(d->net("G"));
    }
    return s;
}

std::string structural_description(const TreeNode& node) {
    std::ostringstream out;
    out << node.devices.size() << " device(s):";
    for (const auto& d : node.devices) out << ' ' << d;
    out << "; signal ports {";
    bool first = true;
    for (const auto& n : node.ports.signal) {
        out << (first ? "" : ", ") << n;
        first = false;
    }
    out << "}";
    return out.str();
}

}  // namespace

std::vector<std::vector<std::size_t>> NetAdjacencyGrouping::group(const std::vector<Subcircuit>& leaves,
                                                                  const CircuitNetlist& netlist) const {
    const std::size_t n = leaves.size();
    std::vector<std::size_t> parent(n);
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](std::size_t x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    };
    std::map<std::string, std::size_t> owner;  // non-supply net -> first leaf touching it
    for (std::size_t i = 0; i < n; ++i) {
        for (const auto& name : leaves[i].devices) {
            const Device* d = netlist.find_device(name);
            if (!d) continue;
            for (const auto& t : d->terminals) {
                if (netlist.role_of(t.net) == NetRole::SupplyPort) continue;
                auto [it, fresh] = owner.emplace(t.net, i);
                if (!fresh) {
                    const std::size_t a = find(it->second);
                    const std::size_t b = find(i);
                    if (a != b) parent[std::max(a, b)] = std::min(a, b);
                }
            }
        }
    }
    std::map<std::size_t, std::vector<std::size_t>> clusters;
    for (std::size_t i = 0; i < n; ++i) clusters[find(i)].push_back(i);
    if (clusters.size() == 1) return singletons(n);
    std::vector<std::vector<std::size_t>> out;
    for (auto& [rep, members] : clusters) out.push_back(std::move(members));
    return out;
}

std::vector<std::vector<std::size_t>> FlatGrouping::group(const std::vector<Subcircuit>& leaves,
                                                          const CircuitNetlist&) const {
    return singletons(leaves.size());
}

PortSets boundary_ports(const std::vector<std::string>& devices, const CircuitNetlist& netlist) {
    std::set<std::string> inside;
    for (const auto& d : devices) inside.insert(lower(d));
    PortSets ports;
    for (const auto& name : devices) {
        const Device* d = netlist.find_device(name);
        if (!d) throw Error(ErrorCode::InvariantViolation, "fragment device '" + name + "' not in netlist");
        for (const auto& t : d->terminals) {
            const NetRole role = netlist.role_of(t.net);
            if (role == NetRole::SupplyPort) {
                ports.supply.insert(t.net);
                continue;
            }
            bool outside = role == NetRole::SignalPort;
            for (const auto& other : netlist.devices) {
                if (outside) break;
                if (inside.count(lower(other.name))) continue;
                outside = std::any_of(other.terminals.begin(), other.terminals.end(),
                                      [&](const Terminal& o) { return o.net == t.net; });
            }
            if (outside) ports.signal.insert(t.net);
        }
    }
    return ports;
}

ReasoningTree build_tree(const std::vector<Subcircuit>& subcircuits, const CircuitNetlist& netlist,
                         const AnnotatorPort& annotator, const GroupingPolicy& grouping) {
    if (subcircuits.empty()) throw Error(ErrorCode::InvariantViolation, "no subcircuits to build a tree from");
    std::map<std::string, std::string> owner;
    for (const auto& sub : subcircuits) {
        for (const auto& d : sub.devices) {
            if (!netlist.find_device(d)) {
                throw Error(ErrorCode::InvariantViolation, "device '" + d + "' of " + sub.subcircuit_id + " not in netlist");
            }
            if (!owner.emplace(lower(d), sub.subcircuit_id).second) {
                throw Error(ErrorCode::InvariantViolation, "device '" + d + "' appears in two subcircuits");
            }
        }
    }
    if (owner.size() != netlist.devices.size()) {
        throw Error(ErrorCode::InvariantViolation, "subcircuits cover " + std::to_string(owner.size()) + " of " +
                                                       std::to_string(netlist.devices.size()) + " devices");
    }

    ReasoningTree tree;
    tree.source_netlist = netlist;
    auto make_leaf = [&](const Subcircuit& sub, std::optional<std::string> parent) {
        TreeNode leaf;
        leaf.id = sub.subcircuit_id;
        leaf.parent = std::move(parent);
        leaf.devices = sub.devices;
        leaf.hint = sub.role_hint;
        leaf.ports = boundary_ports(sub.devices, netlist);
        return leaf;
    };

    if (subcircuits.size() == 1) {
        tree.nodes.push_back(make_leaf(subcircuits.front(), std::nullopt));
        tree.root = tree.nodes.front().id;
        tree.reindex();
        return consolidate_bottom_up(std::move(tree), annotator);
    }

    auto clusters = grouping.group(subcircuits, netlist);
    std::sort(clusters.begin(), clusters.end(),
              [](const auto& a, const auto& b) { return *std::min_element(a.begin(), a.end()) < *std::min_element(b.begin(), b.end()); });

    TreeNode root;
    root.id = "root";
    std::vector<TreeNode> stages;
    std::vector<TreeNode> leaves;
    std::size_t stage_counter = 0;
    for (auto& cluster : clusters) {
        std::sort(cluster.begin(), cluster.end());
        if (cluster.size() == 1) {
            const auto& sub = subcircuits.at(cluster.front());
            root.children.push_back(sub.subcircuit_id);
            leaves.push_back(make_leaf(sub, root.id));
            continue;
        }
        TreeNode stage;
        stage.id = "stage_" + std::to_string(++stage_counter);
        stage.parent = root.id;
        std::set<std::string> members;
        for (std::size_t i : cluster) {
            const auto& sub = subcircuits.at(i);
            stage.children.push_back(sub.subcircuit_id);
            members.insert(sub.devices.begin(), sub.devices.end());
            leaves.push_back(make_leaf(sub, stage.id));
        }
        stage.devices = in_netlist_order(members, netlist);
        stage.ports = boundary_ports(stage.devices, netlist);
        root.children.push_back(stage.id);
        stages.push_back(std::move(stage));
    }
    for (const auto& d : netlist.devices) root.devices.push_back(d.name);
    root.ports = boundary_ports(root.devices, netlist);

    // Breadth-first storage: root, its children in order, then grandchildren.
    std::map<std::string, TreeNode> pending;
    for (auto& s : stages) pending.emplace(s.id, std::move(s));
    for (auto& l : leaves) pending.emplace(l.id, std::move(l));
    tree.root = root.id;
    tree.nodes.push_back(std::move(root));
    for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
        const auto children = tree.nodes[i].children;
        for (const auto& c : children) {
            auto it = pending.find(c);
            if (it == pending.end()) throw Error(ErrorCode::InvariantViolation, "duplicate subcircuit id '" + c + "'");
            tree.nodes.push_back(std::move(it->second));
            pending.erase(it);
        }
    }
    tree.reindex();
    return consolidate_bottom_up(std::move(tree), annotator);
}

ReasoningTree build_tree(const std::vector<Subcircuit>& subcircuits, const CircuitNetlist& netlist,
                         const AnnotatorPort& annotator) {
    return build_tree(subcircuits, netlist, annotator, NetAdjacencyGrouping{});
}

ReasoningTree consolidate_bottom_up(ReasoningTree tree, const AnnotatorPort& annotator) {
    const GlobalContext global = make_global_context(tree.source_netlist);
    tree.annotation_failures = 0;
    std::size_t loop_counter = 0;
    for (const auto& id : tree.post_order()) {
        TreeNode& node = tree.node(id);
        FragmentInfo fragment;
        fragment.node_id = node.id;
        for (const auto& name : node.devices) fragment.devices.push_back(*tree.source_netlist.find_device(name));
        fragment.ports = node.ports;
        fragment.role_hint = node.hint;
        for (const auto& c : node.children) fragment.children.push_back(summarize(tree.node(c), tree.source_netlist));

        try {
            RoleAnnotation annotation = annotator.classify_role(fragment, global);
            if (annotation.role.empty()) throw Error(ErrorCode::AnnotatorFailure, "empty role for " + node.id);
            node.role = std::move(annotation.role);
            node.description = std::move(annotation.description);
        } catch (const std::exception&) {
            ++tree.annotation_failures;
            node.role = node.hint.empty() ? "unclassified" : node.hint;
            node.description = structural_description(node);
        }

        node.loops.clear();
        if (node.children.size() < 2) continue;
        std::vector<LoopAnnotation> loops;
        try {
            loops = annotator.detect_loops(fragment.children, global);
            for (const auto& loop : loops) {
                std::set<std::string> unique(loop.members.begin(), loop.members.end());
                const bool siblings = std::all_of(loop.members.begin(), loop.members.end(), [&](const std::string& m) {
                    return std::find(node.children.begin(), node.children.end(), m) != node.children.end();
                });
                if (unique.size() < 2 || unique.size() != loop.members.size() || !siblings) {
                    throw Error(ErrorCode::AnnotatorFailure, "malformed loop under " + node.id);
                }
            }
        } catch (const std::exception&) {
            ++tree.annotation_failures;
            loops.clear();
        }
        for (auto& loop : loops) {
            node.loops.push_back({"loop_" + std::to_string(++loop_counter), std::move(loop.members),
                                  std::move(loop.polarity_hint)});
        }
    }
    return tree;
}

void validate_tree(const ReasoningTree& tree) {
    auto fail = [](const std::string& msg) { throw Error(ErrorCode::InvariantViolation, msg); };
    if (tree.nodes.empty()) fail("tree has no nodes");
    if (tree.index.size() != tree.nodes.size()) fail("node index out of sync");
    for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
        auto it = tree.index.find(tree.nodes[i].id);
        if (it == tree.index.end() || it->second != i) fail("node index out of sync at '" + tree.nodes[i].id + "'");
    }
    if (!tree.contains(tree.root)) fail("root '" + tree.root + "' missing");
    if (tree.node(tree.root).parent) fail("root has a parent");

    for (const auto& n : tree.nodes) {
        if (n.id != tree.root) {
            if (!n.parent) fail("node '" + n.id + "' has no parent");
            if (!tree.contains(*n.parent)) fail("node '" + n.id + "' points at missing parent '" + *n.parent + "'");
            const auto& siblings = tree.node(*n.parent).children;
            if (std::find(siblings.begin(), siblings.end(), n.id) == siblings.end()) {
                fail("parent '" + *n.parent + "' does not list child '" + n.id + "'");
            }
        }
        for (const auto& c : n.children) {
            if (!tree.contains(c)) fail("node '" + n.id + "' lists missing child '" + c + "'");
            if (tree.node(c).parent != n.id) fail("child '" + c + "' does not point back at '" + n.id + "'");
        }
    }

    std::set<std::string> seen;
    std::deque<std::string> queue{tree.root};
    while (!queue.empty()) {
        std::string id = queue.front();
        queue.pop_front();
        if (!seen.insert(id).second) fail("cycle or shared child at '" + id + "'");
        for (const auto& c : tree.node(id).children) queue.push_back(c);
    }
    if (seen.size() != tree.nodes.size()) fail("unreachable nodes present");

    const CircuitNetlist& netlist = tree.source_netlist;
    std::map<std::string, std::string> covered;
    std::set<std::string> loop_ids;
    for (const auto& n : tree.nodes) {
        for (const auto& d : n.devices) {
            if (!netlist.find_device(d)) fail("node '" + n.id + "' references unknown device '" + d + "'");
        }
        if (n.is_leaf()) {
            if (n.devices.empty()) fail("leaf '" + n.id + "' has an empty fragment");
            for (const auto& d : n.devices) {
                if (!covered.emplace(lower(d), n.id).second) fail("device '" + d + "' covered by two leaves");
            }
        } else {
            std::multiset<std::string> from_children;
            for (const auto& c : n.children) {
                for (const auto& d : tree.node(c).devices) from_children.insert(lower(d));
            }
            std::multiset<std::string> own;
            for (const auto& d : n.devices) own.insert(lower(d));
            if (own != from_children) fail("fragment of '" + n.id + "' differs from the union of its children");
        }
        if (n.ports != boundary_ports(n.devices, netlist)) fail("ports of '" + n.id + "' disagree with its fragment");
        for (const auto& loop : n.loops) {
            if (!loop_ids.insert(loop.loop_id).second) fail("duplicate loop id '" + loop.loop_id + "'");
            if (loop.members.size() < 2) fail("loop '" + loop.loop_id + "' has fewer than two members");
            for (const auto& m : loop.members) {
                if (std::find(n.children.begin(), n.children.end(), m) == n.children.end()) {
                    fail("loop '" + loop.loop_id + "' member '" + m + "' is not a child of '" + n.id + "'");
                }
            }
        }
    }
    if (covered.size() != netlist.devices.size()) {
        fail("leaves cover " + std::to_string(covered.size()) + " of " + std::to_string(netlist.devices.size()) +
             " devices");
    }
}

nlohmann::json save_tree(const ReasoningTree& tree) {
    nlohmann::json nodes = nlohmann::json::array();
    for (const auto& n : tree.nodes) {
        nlohmann::json loops = nlohmann::json::array();
        for (const auto& l : n.loops) {
            loops.push_back({{"loop_id", l.loop_id}, {"members", l.members}, {"polarity_hint", l.polarity_hint}});
        }
        nodes.push_back({{"id", n.id},
                         {"parent", n.parent ? nlohmann::json(*n.parent) : nlohmann::json(nullptr)},
                         {"children", n.children},
                         {"devices", n.devices},
                         {"role", n.role},
                         {"description", n.description},
                         {"hint", n.hint},
                         {"ports", {{"signal", n.ports.signal}, {"supply", n.ports.supply}}},
                         {"loops", loops}});
    }
    nlohmann::json nets = nlohmann::json::object();
    for (const auto& net : tree.source_netlist.nets) nets[net.name] = to_string(net.role);
    return {{"root", tree.root},
            {"annotation_failures", tree.annotation_failures},
            {"netlist", {{"name", tree.source_netlist.name}, {"spice", serialize_netlist(tree.source_netlist)}, {"net_roles", nets}}},
            {"nodes", nodes}};
}

ReasoningTree load_tree(const nlohmann::json& document) {
    ReasoningTree tree;
    try {
        tree.root = document.at("root").get<std::string>();
        tree.annotation_failures = document.value("annotation_failures", std::size_t{0});
        const auto& nl = document.at("netlist");
        ParseOptions opts;
        opts.name = nl.at("name").get<std::string>();
        tree.source_netlist = parse_netlist(nl.at("spice").get<std::string>(), opts);
        for (const auto& [name, role_text] : nl.at("net_roles").items()) {
            auto role = net_role_from_string(role_text.get<std::string>());
            if (!role) throw Error(ErrorCode::SchemaError, "unknown net role '" + role_text.get<std::string>() + "'");
            for (auto& net : tree.source_netlist.nets) {
                if (net.name == name) net.role = *role;
            }
        }
        for (const auto& jn : document.at("nodes")) {
            TreeNode n;
            n.id = jn.at("id").get<std::string>();
            if (!jn.at("parent").is_null()) n.parent = jn.at("parent").get<std::string>();
            n.children = jn.at("children").get<std::vector<std::string>>();
            n.devices = jn.at("devices").get<std::vector<std::string>>();
            n.role = jn.at("role").get<std::string>();
            n.description = jn.at("description").get<std::string>();
            n.hint = jn.value("hint", std::string());
            n.ports.signal = jn.at("ports").at("signal").get<std::set<std::string>>();
            n.ports.supply = jn.at("ports").at("supply").get<std::set<std::string>>();
            for (const auto& jl : jn.at("loops")) {
                n.loops.push_back({jl.at("loop_id").get<std::string>(), jl.at("members").get<std::vector<std::string>>(),
                                   jl.value("polarity_hint", std::string())});
            }
            tree.nodes.push_back(std::move(n));
        }
    } catch (const nlohmann::json::exception& ex) {
        throw Error(ErrorCode::SchemaError, std::string("tree document: ") + ex.what());
    }
    tree.reindex();
    validate_tree(tree);
    return tree;
}

std::string render_tree(const ReasoningTree& tree) {
    std::ostringstream out;
    auto visit = [&](auto&& self, const std::string& id, std::size_t depth) -> void {
        const TreeNode& n = tree.node(id);
        out << std::string(depth * 2, ' ') << n.id << " [" << n.role << "] " << n.devices.size() << " device(s)";
        if (n.is_leaf()) {
            out << ":";
            for (const auto& d : n.devices) out << ' ' << d;
        }
        out << '\n';
        for (const auto& l : n.loops) {
            out << std::string(depth * 2 + 2, ' ') << "~ " << l.loop_id << ":";
            for (const auto& m : l.members) out << ' ' << m;
            if (!l.polarity_hint.empty()) out << " (" << l.polarity_hint << ")";
            out << '\n';
        }
        for (const auto& c : n.children) self(self, c, depth + 1);
    };
    visit(visit, tree.root, 0);
    return out.str();
}

}  // namespace heart
