// SPDX-License-Identifier: Apache-2.0
#include "cli.hpp"

#include "heart/annotator.hpp"
#include "heart/bipartite.hpp"
#include "heart/config.hpp"
#include "heart/decomposition.hpp"
#include "heart/error.hpp"
#include "heart/netlist.hpp"
#include "heart/optimizer.hpp"
#include "heart/pipeline.hpp"
#include "heart/retention.hpp"
#include "heart/scenario.hpp"
#include "heart/schema.hpp"
#include "heart/topo_db.hpp"
#include "heart/traversal.hpp"
#include "heart/tree.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>

namespace heart::cli {

namespace {

struct Common {
    bool json = false;
    std::string config_path;
    std::string annotator;
    std::optional<std::uint64_t> seed;
    int verbose = 0;
};

struct Context {
    Common common;
    GlobalConfig config;
    std::ostream& out;
    std::ostream& err;

    std::unique_ptr<AnnotatorPort> annotator() const {
        const std::string spec = common.annotator.empty() ? config.annotator.spec : common.annotator;
        return make_annotator(spec, config.annotator.timeout_ms, config.annotator.retries);
    }
    std::string annotator_id() const { return common.annotator.empty() ? config.annotator.spec : common.annotator; }
};

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::IoError, "cannot open " + path);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

nlohmann::json read_json(const std::string& path) {
    try {
        return nlohmann::json::parse(read_file(path));
    } catch (const nlohmann::json::parse_error& ex) {
        throw Error(ErrorCode::SchemaError, path + ": " + ex.what());
    }
}

void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + path);
    out << text;
}

// Validates against the named schema, then writes to `path` or prints.
void emit(const Context& ctx, const std::string& schema, const nlohmann::json& doc, const std::string& path) {
    if (!schema.empty()) validate_document(schema, doc);
    if (!path.empty()) write_file(path, doc.dump(2) + "\n");
    else if (ctx.common.json) ctx.out << doc.dump(2) << "\n";
}

CircuitNetlist load_netlist(const Context& ctx, const std::string& path, bool flatten, bool title) {
    ParseOptions opts;
    opts.flatten = flatten;
    opts.first_line_is_title = title;
    return annotate_nets(parse_netlist_file(path, opts), ctx.config.rails);
}

ReasoningTree load_tree_file(const std::string& path) { return load_tree(read_json(path)); }

ReasoningTree tree_for(const Context& ctx, const CircuitNetlist& netlist, const AnnotatorPort& annotator, bool flat) {
    const DecomposeResult d = decompose(netlist, ctx.config.rails, annotator);
    if (flat) return build_tree(d.subcircuits, netlist, annotator, FlatGrouping{});
    return build_tree(d.subcircuits, netlist, annotator);
}

std::string join(const std::vector<std::string>& items, const std::string& sep = ", ") {
    std::string s;
    for (const auto& i : items) s += (s.empty() ? "" : sep) + i;
    return s;
}

template <typename Set>
std::string join_set(const Set& items) {
    return join(std::vector<std::string>(items.begin(), items.end()));
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"heart: hierarchical circuit reasoning toolkit", "heart"};
    app.require_subcommand(1);
    Common common;
    app.add_flag("--json", common.json, "Structured JSON output");
    app.add_option("--config", common.config_path, "Global config JSON (default $HEART_CONFIG)");
    app.add_option("--annotator", common.annotator, "rule | external:<url>");
    app.add_option("--seed", common.seed, "Random seed where randomness exists");
    app.add_flag("-v,--verbose", common.verbose, "More output");

    // parse
    auto* parse = app.add_subcommand("parse", "Parse a SPICE netlist and report devices, nets and the graph");
    std::string parse_in, parse_out;
    bool flatten = false, title = false, canonical = false;
    parse->add_option("netlist", parse_in, "Netlist file")->required();
    parse->add_option("--out", parse_out, "Write graph JSON here");
    parse->add_flag("--flatten", flatten, "Expand one level of .subckt instances");
    parse->add_flag("--title", title, "First line is a title card");
    parse->add_flag("--canonical", canonical, "Print the canonical netlist");

    // decompose
    auto* dec = app.add_subcommand("decompose", "Split a netlist into DC-alive and AC/residual subcircuits");
    std::string dec_in, dec_out;
    dec->add_option("netlist", dec_in, "Netlist file")->required();
    dec->add_option("--out,--report", dec_out, "Write the decomposition report here");
    dec->add_flag("--flatten", flatten, "Expand one level of .subckt instances");
    dec->add_flag("--title", title, "First line is a title card");

    // tree build|show
    auto* tree = app.add_subcommand("tree", "Build or show a reasoning tree");
    tree->require_subcommand(1);
    auto* tree_build = tree->add_subcommand("build", "Build and annotate a tree from a netlist");
    std::string tree_in, tree_out;
    bool flat = false;
    tree_build->add_option("netlist", tree_in, "Netlist file")->required();
    tree_build->add_option("--out", tree_out, "Tree JSON path");
    tree_build->add_flag("--flat", flat, "Attach every leaf to the root");
    tree_build->add_flag("--flatten", flatten, "Expand one level of .subckt instances");
    tree_build->add_flag("--title", title, "First line is a title card");
    auto* tree_show = tree->add_subcommand("show", "Render a saved tree");
    std::string show_in;
    tree_show->add_option("tree", show_in, "Tree JSON")->required();

    // query
    auto* query = app.add_subcommand("query", "Query-conditioned traversal of a tree");
    std::string q_tree, q_text, q_out;
    bool q_scope = false;
    query->add_option("--tree", q_tree, "Tree JSON")->required();
    query->add_option("--q", q_text, "Design query")->required();
    query->add_option("--out,--trace", q_out, "Write the trace here");
    double tau = -1.0, eps = -1.0;
    query->add_option("--tau-stop,--tau", tau, "Override tau_stop");
    query->add_option("--epsilon,--eps", eps, "Override epsilon");
    query->add_flag("--scope", q_scope, "Also list the scoped design variables");

    // retrieve
    auto* ret = app.add_subcommand("retrieve", "Rank topologies of a knowledge table for a query");
    std::string r_db, r_text, r_ref;
    std::size_t r_k = 3;
    ret->add_option("--db", r_db, "Knowledge table JSON")->required();
    ret->add_option("--q", r_text, "Requirement text")->required();
    ret->add_option("--k", r_k, "Number of results")->check(CLI::PositiveNumber);
    ret->add_option("--reference", r_ref, "Incumbent topology id (prior ranks)");

    // pckri
    auto* pk = app.add_subcommand("pckri", "Retention index of a new design against a reference");
    std::string pk_ref, pk_new, pk_out;
    double pk_k = -1.0;
    pk->add_option("--ref", pk_ref, "Reference netlist")->required();
    pk->add_option("--new", pk_new, "New netlist")->required();
    pk->add_option("--k", pk_k, "Sensitivity k");
    pk->add_option("--out,--report", pk_out, "Write the retention report here");
    pk->add_flag("--flatten", flatten, "Expand one level of .subckt instances");
    pk->add_flag("--title", title, "First line is a title card");

    // optimize
    auto* opt = app.add_subcommand("optimize", "Run a sizing or topology scenario");
    std::string o_scenario, o_out;
    std::size_t o_budget = 0;
    opt->add_option("--scenario", o_scenario, "Scenario config JSON")->required();
    opt->add_option("--out", o_out, "Run record JSON");
    opt->add_option("--budget", o_budget, "Override the evaluation budget");

    // eval
    auto* ev = app.add_subcommand("eval", "Score a reasoning bundle against a gold bundle");
    std::string e_gold, e_pred, e_tree, e_netlist;
    ev->add_option("--gold", e_gold, "Gold bundle JSON")->required();
    auto* e_pred_opt = ev->add_option("--pred", e_pred, "Predicted bundle JSON");
    auto* e_tree_opt = ev->add_option("--tree", e_tree, "Tree JSON to score");
    auto* e_net_opt = ev->add_option("--netlist", e_netlist, "Netlist; a tree is built and scored");
    e_pred_opt->excludes(e_tree_opt)->excludes(e_net_opt);
    e_tree_opt->excludes(e_net_opt);

    // plot
    auto* plot = app.add_subcommand("plot", "Export FoM and PCKRI versus evaluation as CSV");
    std::string p_run, p_out;
    plot->add_option("--run", p_run, "Run record JSON")->required();
    plot->add_option("--out", p_out, "CSV path (stdout if omitted)");

    // pipeline
    auto* pipe = app.add_subcommand("pipeline", "parse, decompose, tree and optional query with caching");
    std::string pl_in, pl_q;
    bool offline = false;
    pipe->add_option("netlist", pl_in, "Netlist file")->required();
    pipe->add_option("--q", pl_q, "Design query");
    pipe->add_flag("--offline-only", offline, "Stop after the tree");
    pipe->add_flag("--title", title, "First line is a title card");
    pipe->add_flag("--flatten", flatten, "Expand one level of .subckt instances");

    // schema
    auto* sch = app.add_subcommand("schema", "List, print or check the shipped JSON schemas");
    std::string s_action = "list", s_name, s_file;
    sch->add_option("action", s_action, "list | show | validate")->check(CLI::IsMember({"list", "show", "validate"}));
    sch->add_option("name", s_name, "Schema name");
    sch->add_option("file", s_file, "Document to validate");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::ParseError& ex) {
        err << "error: " << ex.what() << "\n";
        const CLI::App* failing = &app;
        for (auto* sub : app.get_subcommands()) failing = sub;
        err << failing->help();
        return 2;
    }

    Context ctx{common, {}, out, err};
    try {
        ctx.config = load_global_config(common.config_path.empty() ? std::nullopt : std::optional(common.config_path));
        if (tau >= 0.0) ctx.config.traversal.tau_stop = tau;
        if (eps >= 0.0) ctx.config.traversal.epsilon = eps;
        if (pk_k > 0.0) ctx.config.retention.k = pk_k;
        ctx.config.validate();

        if (parse->parsed()) {
            const CircuitNetlist nl = load_netlist(ctx, parse_in, flatten, title);
            const nlohmann::json graph = to_json(build_bipartite(nl));
            if (canonical) {
                out << serialize_netlist(nl);
                if (!parse_out.empty()) emit(ctx, "graph", graph, parse_out);
                return 0;
            }
            if (ctx.common.json || !parse_out.empty()) {
                emit(ctx, "graph", graph, parse_out);
            }
            if (!ctx.common.json) {
                out << nl.name << ": " << nl.devices.size() << " devices, " << nl.nets.size() << " nets, "
                    << nl.terminal_count() << " terminals\n";
                for (const auto& n : nl.nets) out << "  " << std::left << std::setw(12) << n.name << to_string(n.role) << "\n";
            }
            return 0;
        }
        if (dec->parsed()) {
            const CircuitNetlist nl = load_netlist(ctx, dec_in, flatten, title);
            const auto annotator = ctx.annotator();
            const DecomposeResult result = decompose(nl, ctx.config.rails, *annotator);
            const nlohmann::json report = decomposition_report(nl, result);
            emit(ctx, "decomposition", report, dec_out);
            if (!ctx.common.json) {
                for (const auto& s : result.subcircuits) {
                    out << s.subcircuit_id << " [" << to_string(s.kind) << "] " << s.role_hint << ": "
                        << join(s.devices) << "  signal{" << join_set(s.ports.signal) << "} supply{"
                        << join_set(s.ports.supply) << "}\n";
                }
                if (result.annotator_failed) err << "warning: annotator failed: " << result.annotator_error << "\n";
            }
            return 0;
        }
        if (tree_build->parsed()) {
            const CircuitNetlist nl = load_netlist(ctx, tree_in, flatten, title);
            const auto annotator = ctx.annotator();
            const ReasoningTree t = tree_for(ctx, nl, *annotator, flat);
            emit(ctx, "tree", save_tree(t), tree_out);
            if (!ctx.common.json) out << render_tree(t);
            return 0;
        }
        if (tree_show->parsed()) {
            const ReasoningTree t = load_tree_file(show_in);
            if (ctx.common.json) emit(ctx, "tree", save_tree(t), "");
            else out << render_tree(t);
            return 0;
        }
        if (query->parsed()) {
            const ReasoningTree t = load_tree_file(q_tree);
            const auto annotator = ctx.annotator();
            const ReasoningTrace trace = traverse(t, q_text, *annotator, ctx.config.traversal);
            nlohmann::json doc = to_json(trace);
            validate_document("trace", doc);
            if (!q_out.empty()) write_file(q_out, doc.dump(2) + "\n");
            nlohmann::json scope_doc;
            if (q_scope) {
                const ScopedVariableSet scope = scope_design_variables(trace, t, t.source_netlist, ctx.config.scope);
                scope_doc = nlohmann::json::array();
                for (const auto& v : scope.variables) {
                    scope_doc.push_back({{"name", v.name}, {"reference", v.reference}, {"lower", v.lower}, {"upper", v.upper}});
                }
            }
            if (ctx.common.json) {
                if (q_scope) doc["scoped_variables"] = scope_doc;
                out << doc.dump(2) << "\n";
                return 0;
            }
            out << "query: " << q_text << "\n";
            for (const auto& p : trace.paths) out << "  path: " << join(p, " -> ") << "\n";
            for (const auto& [id, reason] : trace.cut_nodes) out << "  cut " << id << " (" << to_string(reason) << ")\n";
            out << "  terminals: " << join_set(trace.terminal_nodes) << "\n";
            out << "  primary: " << primary_terminal(trace, t) << "\n";
            if (q_scope) {
                for (const auto& v : scope_doc) out << "  var " << v["name"].get<std::string>() << "\n";
            }
            return 0;
        }
        if (ret->parsed()) {
            const KnowledgeTable table = load_table_file(r_db);
            const auto annotator = ctx.annotator();
            const RetrievalQuery rq = parse_retrieval_query(
                r_text, table, *annotator, r_ref.empty() ? std::nullopt : std::optional<std::string>(r_ref));
            const auto hits = retrieve(table, rq, r_k, ctx.config.feasibility);
            nlohmann::json results = nlohmann::json::array();
            for (const auto& h : hits) {
                results.push_back({{"topo_id", h.record->topo_id}, {"score", h.score}, {"rank_sum", h.rank_sum},
                                   {"near_best", h.near_best}});
            }
            if (ctx.common.json) {
                out << nlohmann::json{{"query", to_json(rq)}, {"results", results}}.dump(2) << "\n";
                return 0;
            }
            for (const auto& o : rq.objectives) out << "objective " << o.metric << " w=" << o.weight << "\n";
            for (const auto& c : rq.constraints) {
                out << "constraint " << c.metric << " " << to_string(c.tone);
                if (c.prior_rank) out << " prior=" << *c.prior_rank;
                out << "\n";
            }
            for (std::size_t i = 0; i < hits.size(); ++i) {
                out << i + 1 << ". " << hits[i].record->topo_id << "  score=" << hits[i].score
                    << (hits[i].near_best ? "  (near best)" : "") << "\n";
            }
            return 0;
        }
        if (pk->parsed()) {
            const CircuitNetlist ref = load_netlist(ctx, pk_ref, flatten, title);
            const CircuitNetlist cand = load_netlist(ctx, pk_new, flatten, title);
            const RetentionReport report = pckri(ref, cand, ctx.config.retention);
            const nlohmann::json doc = to_json(report);
            if (!pk_out.empty()) emit(ctx, "retention", doc, pk_out);
            if (ctx.common.json) {
                emit(ctx, "retention", doc, "");
            } else {
                out << "pckri=" << report.pckri << " trs=" << report.trs << " dvrs=" << report.dvrs
                    << " d_edit=" << report.d_edit << " |E0|=" << report.ref_edge_count << "\n";
            }
            return 0;
        }
        if (opt->parsed()) {
            ScenarioConfig sc = load_scenario(o_scenario);
            if (common.seed) sc.seed = *common.seed;
            if (o_budget) sc.budget = o_budget;
            if (!common.annotator.empty()) sc.annotator = common.annotator;
            const auto annotator = make_annotator(sc.annotator, ctx.config.annotator.timeout_ms, ctx.config.annotator.retries);
            const RunRecord record = run_scenario(sc, *annotator);
            const nlohmann::json doc = to_json(record);
            emit(ctx, "run_record", doc, o_out);
            if (!ctx.common.json) {
                const auto& b = record.best();
                out << record.optimizer << " seed=" << record.seed << " evals=" << record.history.size()
                    << " best_fom=" << b.fom << " at eval " << b.eval;
                if (b.pckri) out << " pckri=" << *b.pckri;
                out << " evals_to_95=" << record.evals_to_fraction(0.95) << "\n";
                if (record.extra.contains("selected_topology")) {
                    out << "selected topology: " << record.extra["selected_topology"].get<std::string>() << "\n";
                }
            }
            return 0;
        }
        if (ev->parsed()) {
            const AnnotationBundle gold = bundle_from_json(read_json(e_gold));
            AnnotationBundle pred;
            if (!e_pred.empty()) {
                pred = bundle_from_json(read_json(e_pred));
            } else {
                ReasoningTree t;
                if (!e_tree.empty()) {
                    t = load_tree_file(e_tree);
                } else if (!e_netlist.empty()) {
                    const auto annotator = ctx.annotator();
                    t = tree_for(ctx, load_netlist(ctx, e_netlist, flatten, title), *annotator, false);
                } else {
                    throw CLI::RequiredError("one of --pred, --tree, --netlist");
                }
                pred = bundle_from_tree(t, true);
                pred.kcl_compliant = kcl_compliant_split(t.source_netlist, pred.partition, ctx.config.rails);
            }
            const AccuracyScore score = score_reasoning(pred, gold);
            if (ctx.common.json) {
                out << nlohmann::json{{"score", to_json(score)}, {"predicted", to_json(pred)}}.dump(2) << "\n";
            } else {
                out << "A1=" << score.a1 << " A2=" << score.a2 << " A3=" << score.a3 << " A4=" << score.a4
                    << " overall=" << score.overall << "\n";
            }
            return 0;
        }
        if (plot->parsed()) {
            const nlohmann::json run = read_json(p_run);
            validate_document("run_record", run);
            std::ostringstream csv;
            csv << "eval,fom,best_fom,pckri\n";
            csv << std::setprecision(10);
            for (const auto& h : run.at("history")) {
                csv << h.at("eval").get<std::size_t>() << "," << h.at("fom").get<double>() << ","
                    << h.at("best_fom").get<double>() << ",";
                if (!h.at("pckri").is_null()) csv << h.at("pckri").get<double>();
                csv << "\n";
            }
            if (p_out.empty()) out << csv.str();
            else write_file(p_out, csv.str());
            return 0;
        }
        if (pipe->parsed()) {
            PipelineOptions po;
            if (!pl_q.empty()) po.query = pl_q;
            po.offline_only = offline;
            po.annotator_id = ctx.annotator_id();
            po.parse.flatten = flatten;
            po.parse.first_line_is_title = title;
            const auto annotator = ctx.annotator();
            const PipelineResult r = run_pipeline(read_file(pl_in), ctx.config, *annotator, po);
            nlohmann::json doc{{"cache_key", r.cache_key},
                               {"cache_dir", r.cache_dir},
                               {"offline_hit", r.offline_hit},
                               {"trace_hit", r.trace_hit},
                               {"artifacts", r.artifacts}};
            if (ctx.common.json) {
                out << doc.dump(2) << "\n";
            } else {
                out << "cache " << (r.offline_hit ? "hit" : "miss") << " " << r.cache_dir << "\n";
                for (const auto& a : r.artifacts) out << "  " << a << "\n";
                if (r.trace) out << "  terminals: " << join_set(r.trace->terminal_nodes) << "\n";
            }
            return 0;
        }
        if (sch->parsed()) {
            if (s_action == "list") {
                for (const auto& n : schema_names()) out << n << "\n";
            } else if (s_action == "show") {
                if (s_name.empty()) throw CLI::RequiredError("name");
                out << schema_text(s_name);
            } else {
                if (s_name.empty() || s_file.empty()) throw CLI::RequiredError("name and file");
                const SchemaReport rep = check_document(s_name, read_json(s_file));
                if (ctx.common.json) {
                    out << nlohmann::json{{"valid", rep.valid}, {"pointer", rep.pointer}, {"keyword", rep.keyword}}.dump(2)
                        << "\n";
                } else {
                    out << (rep.valid ? "valid" : "invalid: '" + rep.keyword + "' at " + rep.pointer) << "\n";
                }
                return rep.valid ? 0 : 1;
            }
            return 0;
        }
    } catch (const CLI::ParseError& ex) {
        err << "error: " << ex.what() << "\n";
        return 2;
    } catch (const Error& ex) {
        if (common.json) {
            out << nlohmann::json{{"error", {{"code", error_code_name(ex.code())}, {"message", ex.detail()}}}}.dump(2)
                << "\n";
        } else {
            err << "error: " << ex.what() << "\n";
        }
        return 1;
    } catch (const std::exception& ex) {
        if (common.json) {
            out << nlohmann::json{{"error", {{"code", "InternalError"}, {"message", ex.what()}}}}.dump(2) << "\n";
        } else {
            err << "error: " << ex.what() << "\n";
        }
        return 1;
    }
    err << app.help();
    return 2;
}

}  // namespace heart::cli
