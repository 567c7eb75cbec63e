// SPDX-License-Identifier: Apache-2.0
#include "heart/pipeline.hpp"

#include "heart/annotator.hpp"
#include "heart/bipartite.hpp"
#include "heart/decomposition.hpp"
#include "heart/error.hpp"
#include "heart/schema.hpp"

#include <nlohmann/json.hpp>
#include <openssl/evp.h>

#include <filesystem>
#include <fstream>
#include <sstream>

namespace heart {

namespace fs = std::filesystem;

std::string sha256_hex(std::string_view data) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int length = 0;
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    if (!ctx || EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1 ||
        EVP_DigestUpdate(ctx, data.data(), data.size()) != 1 || EVP_DigestFinal_ex(ctx, digest, &length) != 1) {
        EVP_MD_CTX_free(ctx);
        throw Error(ErrorCode::IoError, "sha256 failed");
    }
    EVP_MD_CTX_free(ctx);
    static const char* hex = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < length; ++i) {
        out += hex[digest[i] >> 4];
        out += hex[digest[i] & 0xf];
    }
    return out;
}

namespace {

constexpr const char* kPipelineVersion = "heart-pipeline-1";

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
    out << text;
}

std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::IoError, "cannot read " + path.string());
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

template <typename Fn>
auto stage(const char* name, Fn&& fn) {
    try {
        return fn();
    } catch (const Error& ex) {
        throw Error(ex.code(), std::string("stage ") + name + ": " + ex.detail());
    }
}

}  // namespace

PipelineResult run_pipeline(const std::string& netlist_source, const GlobalConfig& config,
                            const AnnotatorPort& annotator, const PipelineOptions& options) {
    PipelineResult result;
    const nlohmann::json rails{{"high", config.rails.high_rails}, {"low", config.rails.low_rails},
                               {"signal_ports", config.rails.signal_ports}};
    const nlohmann::json parse_opts{{"flatten", options.parse.flatten},
                                    {"title", options.parse.first_line_is_title},
                                    {"name", options.parse.name},
                                    {"globals", options.parse.global_nets}};
    result.cache_key = sha256_hex(std::string(kPipelineVersion) + "\n" + rails.dump() + "\n" + parse_opts.dump() + "\n" +
                                  options.annotator_id + "\n" + netlist_source);
    const fs::path dir = fs::path(config.cache_dir) / result.cache_key;
    result.cache_dir = dir.string();
    const fs::path canonical = dir / "canonical.sp";
    const fs::path graph_file = dir / "graph.json";
    const fs::path decomposition_file = dir / "decomposition.json";
    const fs::path tree_file = dir / "tree.json";
    const fs::path trace_file = dir / "trace.json";
    const fs::path trace_key_file = dir / "trace.key";

    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw Error(ErrorCode::IoError, "cannot create cache directory " + dir.string());

    const bool offline_cached = fs::exists(canonical) && fs::exists(graph_file) && fs::exists(decomposition_file) &&
                                fs::exists(tree_file);
    if (offline_cached) {
        try {
            result.tree = load_tree(nlohmann::json::parse(read_text(tree_file)));
            result.offline_hit = true;
        } catch (const std::exception&) {
            result.offline_hit = false;  // corrupt entry, rebuild
        }
    }
    if (!result.offline_hit) {
        const CircuitNetlist netlist = stage("parse", [&] {
            return annotate_nets(parse_netlist(netlist_source, options.parse), config.rails);
        });
        write_text(canonical, serialize_netlist(netlist));
        stage("graph", [&] {
            const nlohmann::json g = to_json(build_bipartite(netlist));
            validate_document("graph", g);
            write_text(graph_file, g.dump(2));
            return 0;
        });
        const DecomposeResult decomposition = stage("decompose", [&] {
            DecomposeResult d = decompose(netlist, config.rails, annotator);
            const nlohmann::json report = decomposition_report(netlist, d);
            validate_document("decomposition", report);
            write_text(decomposition_file, report.dump(2));
            return d;
        });
        result.tree = stage("tree", [&] {
            ReasoningTree t = build_tree(decomposition.subcircuits, netlist, annotator);
            const nlohmann::json doc = save_tree(t);
            validate_document("tree", doc);
            write_text(tree_file, doc.dump(2));
            return t;
        });
        fs::remove(trace_file, ec);
        fs::remove(trace_key_file, ec);
    }
    result.artifacts = {canonical.string(), graph_file.string(), decomposition_file.string(), tree_file.string()};
    if (options.offline_only || !options.query) return result;

    const std::string trace_key =
        sha256_hex(result.cache_key + "\n" + *options.query + "\n" + std::to_string(config.traversal.tau_stop) + "\n" +
                   std::to_string(config.traversal.epsilon));
    if (fs::exists(trace_file) && fs::exists(trace_key_file) && read_text(trace_key_file) == trace_key) {
        try {
            result.trace = trace_from_json(nlohmann::json::parse(read_text(trace_file)));
            result.trace_hit = true;
        } catch (const std::exception&) {
            result.trace.reset();
        }
    }
    if (!result.trace_hit) {
        result.trace = stage("query", [&] {
            ReasoningTrace t = traverse(result.tree, *options.query, annotator, config.traversal);
            const nlohmann::json doc = to_json(t);
            validate_document("trace", doc);
            write_text(trace_file, doc.dump(2));
            write_text(trace_key_file, trace_key);
            return t;
        });
    }
    result.artifacts.push_back(trace_file.string());
    return result;
}

}  // namespace heart
