// SPDX-License-Identifier: Apache-2.0
#include "heart/retention.hpp"

#include "heart/error.hpp"
#include "heart/tree.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

namespace heart {

namespace {

bool symmetric_terminals(DeviceKind kind) {
    return kind == DeviceKind::Resistor || kind == DeviceKind::Capacitor || kind == DeviceKind::Inductor;
}

// Canonical (terminal, net class) labels of one device's edges.
std::multiset<std::pair<std::string, std::string>> edge_labels(const Device& d) {
    std::multiset<std::pair<std::string, std::string>> out;
    for (const auto& t : d.terminals) out.emplace(symmetric_terminals(d.kind) ? "T" : t.label, lower(t.net));
    return out;
}

std::size_t pair_cost(const Device& a, const Device& b) {
    const auto ea = edge_labels(a);
    const auto eb = edge_labels(b);
    std::vector<std::pair<std::string, std::string>> common;
    std::set_intersection(ea.begin(), ea.end(), eb.begin(), eb.end(), std::back_inserter(common));
    return ea.size() + eb.size() - 2 * common.size();
}

// Minimum-cost perfect assignment on a square matrix (potentials method).
std::vector<std::size_t> assign(const std::vector<std::vector<long long>>& cost) {
    const std::size_t n = cost.size();
    const long long inf = std::numeric_limits<long long>::max() / 4;
    std::vector<long long> u(n + 1, 0), v(n + 1, 0);
    std::vector<std::size_t> p(n + 1, 0), way(n + 1, 0);
    for (std::size_t i = 1; i <= n; ++i) {
        p[0] = i;
        std::size_t j0 = 0;
        std::vector<long long> minv(n + 1, inf);
        std::vector<bool> used(n + 1, false);
        do {
            used[j0] = true;
            const std::size_t i0 = p[j0];
            long long delta = inf;
            std::size_t j1 = 0;
            for (std::size_t j = 1; j <= n; ++j) {
                if (used[j]) continue;
                const long long cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (std::size_t j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            const std::size_t j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0 != 0);
    }
    std::vector<std::size_t> row_to_col(n);
    for (std::size_t j = 1; j <= n; ++j) row_to_col[p[j] - 1] = j - 1;
    return row_to_col;
}

}  // namespace

EditDistanceResult circuit_edit_distance(const CircuitNetlist& ref, const CircuitNetlist& candidate) {
    EditDistanceResult result;
    result.ref_edges = ref.terminal_count();
    result.new_edges = candidate.terminal_count();
    const std::size_t n = ref.devices.size();
    const std::size_t m = candidate.devices.size();
    const std::size_t size = n + m;
    if (size == 0) return result;

    // Costs are scaled so that name agreement only breaks ties.
    const long long scale = static_cast<long long>(size) + 1;
    const long long forbidden = std::numeric_limits<long long>::max() / (8 * static_cast<long long>(size) + 8);
    std::vector<std::vector<long long>> cost(size, std::vector<long long>(size, forbidden));
    for (std::size_t i = 0; i < n; ++i) {
        const Device& a = ref.devices[i];
        for (std::size_t j = 0; j < m; ++j) {
            const Device& b = candidate.devices[j];
            if (a.kind != b.kind) continue;
            cost[i][j] = static_cast<long long>(pair_cost(a, b)) * scale + (iequals(a.name, b.name) ? 0 : 1);
        }
        cost[i][m + i] = static_cast<long long>(a.terminals.size()) * scale + 1;
    }
    for (std::size_t j = 0; j < m; ++j) {
        cost[n + j][j] = static_cast<long long>(candidate.devices[j].terminals.size()) * scale + 1;
        for (std::size_t i = 0; i < n; ++i) cost[n + j][m + i] = 0;
    }

    const auto match = assign(cost);
    std::size_t distance = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (match[i] < m) {
            distance += pair_cost(ref.devices[i], candidate.devices[match[i]]);
            result.correspondence[ref.devices[i].name] = candidate.devices[match[i]].name;
        } else {
            distance += ref.devices[i].terminals.size();
        }
    }
    for (std::size_t j = 0; j < m; ++j) {
        if (match[n + j] == j) distance += candidate.devices[j].terminals.size();
    }
    result.distance = distance;
    return result;
}

void SensitivityConfig::validate() const {
    if (!(k > 0.0) || !std::isfinite(k)) throw Error(ErrorCode::InvalidConfig, "sensitivity k must be positive");
}

DvrsResult dvrs(const std::vector<VariableValue>& reference, const std::vector<VariableValue>& candidate,
                const SensitivityConfig& cfg) {
    cfg.validate();
    std::map<std::string, double> values;
    for (const auto& v : candidate) values[v.name] = v.value;
    DvrsResult out;
    double sum = 0.0;
    for (const auto& r : reference) {
        auto it = values.find(r.name);
        if (it == values.end()) continue;
        if (!(r.value > 0.0) || !(it->second > 0.0)) {
            throw Error(ErrorCode::NonPositiveValue, "variable " + r.name + " must be strictly positive on both sides");
        }
        const double decades = std::min(1.0, std::fabs(std::log10(it->second / r.value)));
        const double term = std::exp(-cfg.k * decades);
        out.per_variable.push_back({r.name, r.value, it->second, term});
        sum += term;
    }
    if (out.per_variable.empty()) throw Error(ErrorCode::NoMatchedVariables, "no design variable appears in both designs");
    out.value = sum / static_cast<double>(out.per_variable.size());
    return out;
}

double trs(std::size_t edit_distance, std::size_t ref_edges) {
    if (ref_edges == 0) throw Error(ErrorCode::EmptyReference, "reference design has no edges");
    return 1.0 - static_cast<double>(edit_distance) / static_cast<double>(ref_edges);
}

double trs(const CircuitNetlist& ref, const CircuitNetlist& candidate) {
    const auto ed = circuit_edit_distance(ref, candidate);
    return trs(ed.distance, ed.ref_edges);
}

std::vector<VariableValue> design_variables(const CircuitNetlist& netlist) {
    std::vector<VariableValue> out;
    for (const auto& d : netlist.devices) {
        std::vector<std::string> keys;
        if (is_mos(d.kind)) keys = {"W", "L"};
        else if (d.kind == DeviceKind::Resistor) keys = {"R"};
        else if (d.kind == DeviceKind::Capacitor) keys = {"C"};
        for (const auto& k : keys) {
            if (auto it = d.params.find(k); it != d.params.end()) out.push_back({d.name + "." + k, it->second});
        }
    }
    return out;
}

RetentionReport pckri(const CircuitNetlist& ref, const CircuitNetlist& candidate, const SensitivityConfig& cfg) {
    cfg.validate();
    const auto ed = circuit_edit_distance(ref, candidate);
    RetentionReport report;
    report.d_edit = ed.distance;
    report.ref_edge_count = ed.ref_edges;
    report.approximate = ed.approximate;
    report.correspondence = ed.correspondence;
    report.trs = trs(ed.distance, ed.ref_edges);
    report.trs_floored = std::max(0.0, report.trs);

    std::set<std::string> retained;
    for (const auto& [a, b] : ed.correspondence) {
        if (iequals(a, b)) retained.insert(lower(a));
    }
    auto keep = [&](const std::vector<VariableValue>& vars) {
        std::vector<VariableValue> out;
        for (const auto& v : vars) {
            const std::string device = v.name.substr(0, v.name.rfind('.'));
            if (retained.count(lower(device))) out.push_back({lower(v.name), v.value});
        }
        return out;
    };
    const auto d = dvrs(keep(design_variables(ref)), keep(design_variables(candidate)), cfg);
    report.dvrs = d.value;
    report.per_variable = d.per_variable;
    report.pckri = report.trs * report.dvrs;
    return report;
}

nlohmann::json to_json(const RetentionReport& report) {
    nlohmann::json vars = nlohmann::json::array();
    for (const auto& v : report.per_variable) {
        vars.push_back({{"name", v.name}, {"reference", v.reference}, {"value", v.value}, {"term", v.term}});
    }
    return {{"trs", report.trs},
            {"trs_floored", report.trs_floored},
            {"dvrs", report.dvrs},
            {"pckri", report.pckri},
            {"d_edit", report.d_edit},
            {"ref_edge_count", report.ref_edge_count},
            {"approximate", report.approximate},
            {"per_variable", vars},
            {"correspondence", report.correspondence}};
}

namespace {

std::set<std::string> lowered(const std::vector<std::string>& items) {
    std::set<std::string> out;
    for (const auto& s : items) out.insert(lower(s));
    return out;
}

}  // namespace

AccuracyScore score_reasoning(const AnnotationBundle& predicted, const AnnotationBundle& gold) {
    AccuracyScore s;
    s.a1 = lower(predicted.circuit_class) == lower(gold.circuit_class) ? 1.0 : 0.0;

    std::map<std::string, std::size_t> group_of;
    for (std::size_t g = 0; g < predicted.partition.size(); ++g) {
        for (const auto& d : predicted.partition[g]) group_of[lower(d)] = g;
    }
    std::size_t pairs = 0;
    std::size_t agreed = 0;
    for (const auto& group : gold.partition) {
        for (std::size_t i = 0; i < group.size(); ++i) {
            for (std::size_t j = i + 1; j < group.size(); ++j) {
                ++pairs;
                auto a = group_of.find(lower(group[i]));
                auto b = group_of.find(lower(group[j]));
                if (a != group_of.end() && b != group_of.end() && a->second == b->second) ++agreed;
            }
        }
    }
    if (!predicted.kcl_compliant) s.a2 = 0.0;
    else s.a2 = pairs == 0 ? 1.0 : static_cast<double>(agreed) / static_cast<double>(pairs);

    if (gold.loops.empty()) {
        s.a3 = 1.0;
    } else {
        std::size_t matched = 0;
        std::vector<bool> used(predicted.loops.size(), false);
        for (const auto& g : gold.loops) {
            const auto want = lowered(g.devices);
            for (std::size_t i = 0; i < predicted.loops.size(); ++i) {
                if (used[i] || lowered(predicted.loops[i].devices) != want) continue;
                if (lower(predicted.loops[i].purpose).find(lower(g.purpose)) == std::string::npos) continue;
                used[i] = true;
                ++matched;
                break;
            }
        }
        s.a3 = static_cast<double>(matched) / static_cast<double>(gold.loops.size());
    }

    if (gold.keywords.empty()) {
        s.a4 = 1.0;
    } else {
        std::string text;
        for (const auto& k : predicted.keywords) text += lower(k) + "\n";
        std::size_t hits = 0;
        for (const auto& k : gold.keywords) hits += text.find(lower(k)) != std::string::npos ? 1 : 0;
        s.a4 = static_cast<double>(hits) / static_cast<double>(gold.keywords.size());
    }
    s.overall = (s.a1 + s.a2 + s.a3 + s.a4) / 4.0;
    return s;
}

AnnotationBundle bundle_from_tree(const ReasoningTree& tree, bool kcl_compliant) {
    AnnotationBundle b;
    b.circuit_class = tree.node(tree.root).role;
    b.kcl_compliant = kcl_compliant;
    for (const auto& n : tree.nodes) {
        if (n.is_leaf()) b.partition.push_back(n.devices);
        b.keywords.push_back(n.role);
        b.keywords.push_back(n.description);
        for (const auto& l : n.loops) {
            LoopLabel label;
            for (const auto& m : l.members) {
                const auto& devs = tree.node(m).devices;
                label.devices.insert(label.devices.end(), devs.begin(), devs.end());
            }
            label.purpose = l.polarity_hint;
            b.loops.push_back(std::move(label));
        }
    }
    return b;
}

AnnotationBundle bundle_from_json(const nlohmann::json& document) {
    AnnotationBundle b;
    try {
        b.circuit_class = document.at("class").get<std::string>();
        b.partition = document.at("partition").get<std::vector<std::vector<std::string>>>();
        b.kcl_compliant = document.value("kcl_compliant", true);
        for (const auto& l : document.at("loops")) {
            b.loops.push_back({l.at("devices").get<std::vector<std::string>>(), l.value("purpose", std::string())});
        }
        b.keywords = document.at("keywords").get<std::vector<std::string>>();
    } catch (const nlohmann::json::exception& ex) {
        throw Error(ErrorCode::SchemaError, std::string("annotation bundle: ") + ex.what());
    }
    return b;
}

nlohmann::json to_json(const AnnotationBundle& bundle) {
    nlohmann::json loops = nlohmann::json::array();
    for (const auto& l : bundle.loops) loops.push_back({{"devices", l.devices}, {"purpose", l.purpose}});
    return {{"class", bundle.circuit_class},
            {"partition", bundle.partition},
            {"kcl_compliant", bundle.kcl_compliant},
            {"loops", loops},
            {"keywords", bundle.keywords}};
}

nlohmann::json to_json(const AccuracyScore& score) {
    return {{"a1", score.a1}, {"a2", score.a2}, {"a3", score.a3}, {"a4", score.a4}, {"overall", score.overall}};
}

}  // namespace heart
