// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "heart/config.hpp"
#include "heart/traversal.hpp"
#include "heart/tree.hpp"

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace heart {

class AnnotatorPort;

std::string sha256_hex(std::string_view data);

struct PipelineOptions {
    std::optional<std::string> query;
    bool offline_only = false;  // stop after the tree
    std::string annotator_id = "rule";
    ParseOptions parse;
};

struct PipelineResult {
    std::string cache_key;
    std::string cache_dir;     // <cache>/<key>
    bool offline_hit = false;  // parse..tree reused
    bool trace_hit = false;
    std::vector<std::string> artifacts;  // paths in stage order
    ReasoningTree tree;
    std::optional<ReasoningTrace> trace;
};

// parse -> graph -> decompose -> tree -> (query). Artifacts land in
// <cache>/<sha256 of stage inputs>/: canonical.sp, graph.json,
// decomposition.json, tree.json, trace.json. Upstream stages are reused when
// their input hash matches. A failing stage rethrows with its name prefixed.
PipelineResult run_pipeline(const std::string& netlist_source, const GlobalConfig& config,
                            const AnnotatorPort& annotator, const PipelineOptions& options);

}  // namespace heart
