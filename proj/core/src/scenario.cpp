// SPDX-License-Identifier: Apache-2.0
#include "heart/scenario.hpp"

#include "heart/annotator.hpp"
#include "heart/decomposition.hpp"
#include "heart/error.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

namespace heart {

namespace {

std::optional<double> safe_pckri(const CircuitNetlist& reference, const CircuitNetlist& design, const DesignPoint& p,
                                 const SensitivityConfig& cfg) {
    try {
        return pckri(reference, apply_values(design, p.values()), cfg).pckri;
    } catch (const Error&) {
        return std::nullopt;
    }
}

std::set<std::string> as_set(const std::vector<std::string>& v) { return {v.begin(), v.end()}; }

}  // namespace

RunRecord run_sizing(const SearchSpace& space, Evaluator& evaluator, const CircuitNetlist& reference,
                     const CircuitNetlist& design, const OptimizerChoice& optimizer, const RunOptions& options,
                     const SensitivityConfig& retention) {
    RunOptions o = options;
    if (!o.retention) {
        o.retention = [&](const DesignPoint& p) { return safe_pckri(reference, design, p, retention); };
    }
    return optimize(space, evaluator, o, optimizer);
}

RunRecord run_scenario_sizing(const ReasoningTree& tree, const std::string& query, const AnnotatorPort& annotator,
                              const EvaluatorFactory& evaluator, const OptimizerChoice& optimizer,
                              const RunOptions& options, const ScenarioSettings& cfg) {
    const ReasoningTrace trace = traverse(tree, query, annotator, cfg.traversal);
    const ScopedVariableSet scope = scope_design_variables(trace, tree, tree.source_netlist, cfg.scope);
    const SearchSpace space = SearchSpace::from_scope(scope, cfg.incumbent_topology.value_or(tree.root));
    auto ev = evaluator(tree.source_netlist);
    RunRecord record =
        run_sizing(space, *ev, tree.source_netlist, tree.source_netlist, optimizer, options, cfg.retention);
    record.trace = to_json(trace);
    record.extra["mode"] = "sizing";
    record.extra["query"] = query;
    record.extra["scoped_devices"] = scope.scoped_devices;
    return record;
}

TopologyTemplate parse_template(const std::string& text) {
    TopologyTemplate tpl;
    std::istringstream in(text);
    std::string line;
    std::string body;
    bool open = false;
    bool closed = false;
    while (std::getline(in, line)) {
        std::istringstream words(line);
        std::string head;
        words >> head;
        const std::string h = lower(head);
        if (h == ".subckt") {
            if (open || closed) throw Error(ErrorCode::SchemaError, "template holds more than one .subckt");
            words >> tpl.name;
            for (std::string port; words >> port;) tpl.ports.push_back(port);
            open = true;
        } else if (h == ".ends") {
            if (!open) throw Error(ErrorCode::SchemaError, "template .ends without .subckt");
            open = false;
            closed = true;
        } else if (open) {
            body += line + "\n";
        }
    }
    if (!closed) throw Error(ErrorCode::SchemaError, "template is not a closed .subckt");
    if (tpl.ports.empty()) throw Error(ErrorCode::SchemaError, "template " + tpl.name + " declares no ports");
    if (body.find_first_not_of(" \t\r\n") == std::string::npos) {
        throw Error(ErrorCode::SchemaError, "template " + tpl.name + " has no devices");
    }
    ParseOptions opts;
    opts.name = tpl.name;
    tpl.devices = parse_netlist(body, opts).devices;
    if (tpl.devices.empty()) throw Error(ErrorCode::SchemaError, "template " + tpl.name + " has no devices");
    return tpl;
}

SwapResult swap_fragment(const CircuitNetlist& netlist, const TreeNode& node, const TopologyTemplate& tpl,
                         const RailConfig& rails) {
    std::set<std::string> node_ports;
    for (const auto& p : node.ports.signal) node_ports.insert(p);
    for (const auto& p : node.ports.supply) node_ports.insert(p);

    // Template port -> circuit net, by case-insensitive name.
    std::map<std::string, std::string> binding;
    std::set<std::string> bound;
    for (const auto& port : tpl.ports) {
        auto it = std::find_if(node_ports.begin(), node_ports.end(), [&](const std::string& n) { return iequals(n, port); });
        if (it == node_ports.end()) {
            throw Error(ErrorCode::PortBindingMismatch,
                        "template " + tpl.name + " port '" + port + "' is not a port of node " + node.id);
        }
        binding[port] = *it;
        bound.insert(*it);
    }
    for (const auto& p : node_ports) {
        if (!bound.count(p)) {
            throw Error(ErrorCode::PortBindingMismatch, "node " + node.id + " port '" + p + "' is missing from template " + tpl.name);
        }
    }

    const std::set<std::string> removed = as_set(node.devices);
    std::set<std::string> taken_devices;
    std::set<std::string> taken_nets;
    for (const auto& d : netlist.devices) {
        if (removed.count(d.name)) continue;
        taken_devices.insert(lower(d.name));
        for (const auto& t : d.terminals) taken_nets.insert(lower(t.net));
    }
    for (const auto& p : node_ports) taken_nets.insert(lower(p));

    std::map<std::string, std::string> internal;
    auto net_for = [&](const std::string& net) {
        for (const auto& [port, actual] : binding) {
            if (iequals(port, net)) return actual;
        }
        if (rails.is_supply(net)) return net;
        auto it = internal.find(lower(net));
        if (it != internal.end()) return it->second;
        std::string name = net;
        for (int k = 1; taken_nets.count(lower(name)); ++k) {
            name = tpl.name + "_" + net + (k > 1 ? std::to_string(k) : "");
        }
        taken_nets.insert(lower(name));
        internal[lower(net)] = name;
        return name;
    };

    SwapResult result;
    std::vector<Device> inserted;
    for (Device d : tpl.devices) {
        std::string name = d.name;
        for (int k = 1; taken_devices.count(lower(name)); ++k) {
            name = d.name + "_" + tpl.name + (k > 1 ? std::to_string(k) : "");
        }
        taken_devices.insert(lower(name));
        d.name = name;
        for (auto& t : d.terminals) t.net = net_for(t.net);
        result.new_devices.push_back(name);
        inserted.push_back(std::move(d));
    }

    CircuitNetlist out;
    out.name = netlist.name;
    out.pins = netlist.pins;
    bool placed = false;
    for (const auto& d : netlist.devices) {
        if (removed.count(d.name)) {
            if (!placed) out.devices.insert(out.devices.end(), inserted.begin(), inserted.end());
            placed = true;
            continue;
        }
        out.devices.push_back(d);
    }
    if (!placed) out.devices.insert(out.devices.end(), inserted.begin(), inserted.end());
    std::set<std::string> seen;
    for (const auto& d : out.devices) {
        for (const auto& t : d.terminals) {
            if (seen.insert(t.net).second) out.nets.push_back({t.net, NetRole::InternalNet});
        }
    }
    out.raw_lines = {serialize_netlist(out)};
    result.netlist = annotate_nets(out, rails);
    return result;
}

RunRecord run_scenario_topology(const ReasoningTree& tree, const std::string& query, const KnowledgeTable& table,
                                const AnnotatorPort& annotator, const EvaluatorFactory& evaluator,
                                const OptimizerChoice& optimizer, const RunOptions& options,
                                const ScenarioSettings& cfg) {
    if (!(cfg.incumbent_fraction > 0.0 && cfg.incumbent_fraction < 1.0)) {
        throw Error(ErrorCode::InvalidConfig, "incumbent_fraction must lie in (0, 1)");
    }
    const CircuitNetlist& reference = tree.source_netlist;
    const ReasoningTrace trace = traverse(tree, query, annotator, cfg.traversal);
    const std::string bottleneck = cfg.scope.terminals.empty() ? primary_terminal(trace, tree) : cfg.scope.terminals.front();
    if (!tree.contains(bottleneck)) throw Error(ErrorCode::EmptyScope, "scope terminal " + bottleneck + " is not in the tree");
    const TreeNode& node = tree.node(bottleneck);

    const std::string retrieval_text = cfg.retrieval_query.empty() ? query : cfg.retrieval_query;
    const RetrievalQuery rq = parse_retrieval_query(retrieval_text, table, annotator, cfg.incumbent_topology);
    const auto hits = retrieve(table, rq, cfg.top_k + (cfg.incumbent_topology ? 1 : 0));
    std::vector<const RetrievalHit*> candidates;
    for (const auto& h : hits) {
        if (cfg.incumbent_topology && h.record->topo_id == *cfg.incumbent_topology) continue;
        if (candidates.size() < cfg.top_k) candidates.push_back(&h);
    }

    struct Stage {
        std::string topology;
        SearchSpace space;
        CircuitNetlist design;
        std::size_t budget = 0;
    };
    std::vector<Stage> stages;
    const std::size_t incumbent_budget =
        candidates.empty() ? options.budget
                           : std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(cfg.incumbent_fraction *
                                                                                           static_cast<double>(options.budget))));
    {
        ScopedVariableSet scope = scope_devices(as_set(node.devices), reference, cfg.scope);
        if (scope.variables.empty()) throw Error(ErrorCode::EmptyScope, "bottleneck node " + bottleneck + " has no tunable values");
        stages.push_back({cfg.incumbent_topology.value_or("incumbent"),
                          SearchSpace::from_scope(scope, cfg.incumbent_topology.value_or("incumbent")), reference,
                          incumbent_budget});
    }
    const std::size_t rest = options.budget - incumbent_budget;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        const TopologyRecord& row = *candidates[i]->record;
        if (row.netlist_template.empty()) throw Error(ErrorCode::InvalidConfig, "topology " + row.topo_id + " has no template");
        const SwapResult swap = swap_fragment(reference, node, parse_template(row.netlist_template), cfg.rails);
        ScopedVariableSet scope = scope_devices(as_set(swap.new_devices), swap.netlist, cfg.scope);
        const std::size_t share = rest / candidates.size() + (i + 1 == candidates.size() ? rest % candidates.size() : 0);
        stages.push_back({row.topo_id, SearchSpace::from_scope(scope, row.topo_id), swap.netlist, share});
    }

    RunRecord merged;
    merged.optimizer = optimizer.kind;
    merged.seed = options.seed;
    merged.budget = options.budget;
    merged.trace = to_json(trace);
    nlohmann::json stage_log = nlohmann::json::array();
    std::size_t best_stage = 0;
    for (std::size_t s = 0; s < stages.size(); ++s) {
        Stage& stage = stages[s];
        auto ev = evaluator(stage.design);
        RunOptions o = options;
        o.budget = stage.budget;
        o.seed = options.seed + s;
        RunRecord r = run_sizing(stage.space, *ev, reference, stage.design, optimizer, o, cfg.retention);
        const auto report = pckri(reference, stage.design, cfg.retention);
        stage_log.push_back({{"topology_id", stage.topology},
                             {"budget", stage.budget},
                             {"evaluations", r.history.size()},
                             {"best_fom", r.history.empty() ? nlohmann::json(nullptr) : nlohmann::json(r.best().fom)},
                             {"d_edit", report.d_edit},
                             {"trs", report.trs},
                             {"ref_edges", report.ref_edge_count}});
        for (auto& h : r.history) {
            h.eval = merged.history.size() + 1;
            h.best_fom = merged.history.empty() ? h.fom : std::max(h.fom, merged.history.back().best_fom);
            if (merged.history.empty() || h.fom > merged.best().fom) {
                merged.best_index = merged.history.size();
                best_stage = s;
            }
            merged.history.push_back(std::move(h));
        }
    }
    merged.space = stages[best_stage].space;
    merged.config = {{"optimizer", optimizer.kind}, {"incumbent_fraction", cfg.incumbent_fraction}, {"top_k", cfg.top_k}};
    merged.extra["mode"] = "topology";
    merged.extra["query"] = query;
    merged.extra["bottleneck"] = bottleneck;
    merged.extra["retrieval_query"] = to_json(rq);
    merged.extra["stages"] = stage_log;
    merged.extra["selected_topology"] = stages[best_stage].topology;
    merged.extra["swapped_netlist"] = serialize_netlist(stages[best_stage].design);
    return merged;
}

namespace {

std::string resolve(const std::string& base_dir, const std::string& path) {
    const std::filesystem::path p(path);
    return p.is_absolute() ? path : (std::filesystem::path(base_dir) / p).lexically_normal().string();
}

void reject_unknown(const nlohmann::json& obj, std::initializer_list<const char*> allowed, const std::string& where) {
    for (const auto& [key, value] : obj.items()) {
        if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; })) {
            throw Error(ErrorCode::InvalidConfig, "unknown key '" + key + "' in " + where);
        }
    }
}

}  // namespace

ScenarioConfig scenario_from_json(const nlohmann::json& document, const std::string& base_dir) {
    ScenarioConfig c;
    try {
        if (!document.is_object()) throw Error(ErrorCode::InvalidConfig, "scenario must be a JSON object");
        reject_unknown(document,
                       {"mode", "netlist", "tree", "query", "optimizer", "budget", "seed", "evaluator", "db", "scope",
                        "traversal", "retention", "topology", "annotator", "rails"},
                       "scenario");
        c.mode = document.value("mode", c.mode);
        if (c.mode != "sizing" && c.mode != "topology") throw Error(ErrorCode::InvalidConfig, "mode must be sizing or topology");
        c.netlist = resolve(base_dir, document.at("netlist").get<std::string>());
        if (document.contains("tree")) c.tree = resolve(base_dir, document.at("tree").get<std::string>());
        c.query = document.at("query").get<std::string>();
        c.optimizer = optimizer_from_json(document.value("optimizer", nlohmann::json::object()));
        c.budget = document.value("budget", c.budget);
        c.seed = document.value("seed", c.seed);
        c.evaluator = document.at("evaluator");
        if (document.contains("db")) c.db = resolve(base_dir, document.at("db").get<std::string>());
        c.annotator = document.value("annotator", c.annotator);
        if (document.contains("scope")) {
            const auto& s = document.at("scope");
            reject_unknown(s, {"span", "terminals"}, "scope");
            c.settings.scope.span = s.value("span", c.settings.scope.span);
            c.settings.scope.terminals = s.value("terminals", std::vector<std::string>{});
        }
        if (document.contains("traversal")) {
            const auto& t = document.at("traversal");
            reject_unknown(t, {"tau_stop", "epsilon"}, "traversal");
            c.settings.traversal.tau_stop = t.value("tau_stop", c.settings.traversal.tau_stop);
            c.settings.traversal.epsilon = t.value("epsilon", c.settings.traversal.epsilon);
        }
        c.settings.traversal.validate();
        if (document.contains("retention")) {
            const auto& r = document.at("retention");
            reject_unknown(r, {"k"}, "retention");
            c.settings.retention.k = r.value("k", c.settings.retention.k);
        }
        c.settings.retention.validate();
        if (document.contains("topology")) {
            const auto& t = document.at("topology");
            reject_unknown(t, {"top_k", "incumbent_fraction", "incumbent", "retrieval_query"}, "topology");
            c.settings.top_k = t.value("top_k", c.settings.top_k);
            c.settings.incumbent_fraction = t.value("incumbent_fraction", c.settings.incumbent_fraction);
            if (t.contains("incumbent")) c.settings.incumbent_topology = t.at("incumbent").get<std::string>();
            c.settings.retrieval_query = t.value("retrieval_query", std::string());
        }
        if (document.contains("rails")) {
            const auto& r = document.at("rails");
            reject_unknown(r, {"high", "low", "signal_ports"}, "rails");
            c.settings.rails.high_rails = r.value("high", c.settings.rails.high_rails);
            c.settings.rails.low_rails = r.value("low", c.settings.rails.low_rails);
            c.settings.rails.signal_ports = r.value("signal_ports", c.settings.rails.signal_ports);
        }
    } catch (const nlohmann::json::exception& ex) {
        throw Error(ErrorCode::InvalidConfig, std::string("scenario: ") + ex.what());
    }
    if (c.budget == 0) throw Error(ErrorCode::BudgetTooSmall, "scenario budget must be positive");
    if (c.mode == "topology" && !c.db) throw Error(ErrorCode::InvalidConfig, "topology scenario needs a db");
    return c;
}

ScenarioConfig load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::IoError, "cannot open " + path);
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& ex) {
        throw Error(ErrorCode::SchemaError, path + ": " + ex.what());
    }
    return scenario_from_json(doc, std::filesystem::path(path).parent_path().string());
}

RunRecord run_scenario(const ScenarioConfig& cfg, const AnnotatorPort& annotator) {
    ReasoningTree tree;
    if (cfg.tree) {
        std::ifstream in(*cfg.tree);
        if (!in) throw Error(ErrorCode::IoError, "cannot open " + *cfg.tree);
        try {
            tree = load_tree(nlohmann::json::parse(in));
        } catch (const nlohmann::json::exception& ex) {
            throw Error(ErrorCode::SchemaError, *cfg.tree + ": " + ex.what());
        }
    } else {
        const CircuitNetlist netlist = annotate_nets(parse_netlist_file(cfg.netlist), cfg.settings.rails);
        const auto decomposition = decompose(netlist, cfg.settings.rails, annotator);
        tree = build_tree(decomposition.subcircuits, netlist, annotator);
    }
    const EvaluatorFactory factory = make_evaluator_factory(cfg.evaluator);
    RunOptions options;
    options.budget = cfg.budget;
    options.seed = cfg.seed;
    RunRecord record;
    if (cfg.mode == "topology") {
        const KnowledgeTable table = load_table_file(*cfg.db);
        record = run_scenario_topology(tree, cfg.query, table, annotator, factory, cfg.optimizer, options, cfg.settings);
    } else {
        record = run_scenario_sizing(tree, cfg.query, annotator, factory, cfg.optimizer, options, cfg.settings);
    }
    return record;
}

}  // namespace heart
