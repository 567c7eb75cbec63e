// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "heart/netlist.hpp"
#include "heart/retention.hpp"
#include "heart/topo_db.hpp"
#include "heart/traversal.hpp"

#include <nlohmann/json_fwd.hpp>

#include <optional>
#include <string>

namespace heart {

struct AnnotatorSettings {
    std::string spec = "rule";
    int timeout_ms = 30000;
    int retries = 2;
};

struct GlobalConfig {
    RailConfig rails;
    TraversalConfig traversal;
    SensitivityConfig retention;
    ScopeConfig scope;
    FeasibilityConfig feasibility;
    AnnotatorSettings annotator;
    std::string cache_dir;  // empty: .heart-cache in the working directory
    std::string data_dir;
    int verbosity = 0;

    void validate() const;  // InvalidConfig
};

// Unknown keys and out-of-range thresholds throw InvalidConfig.
GlobalConfig config_from_json(const nlohmann::json& document);
nlohmann::json to_json(const GlobalConfig& config);

// `path`, else $HEART_CONFIG, else defaults; $HEART_CACHE_DIR overrides the
// cache directory in every case.
GlobalConfig load_global_config(const std::optional<std::string>& path = std::nullopt);

}  // namespace heart
