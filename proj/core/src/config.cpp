// SPDX-License-Identifier: Apache-2.0
#include "heart/config.hpp"

#include "heart/error.hpp"
#include "heart/schema.hpp"

#include <nlohmann/json.hpp>

#include <cstdlib>
#include <fstream>

namespace heart {

void GlobalConfig::validate() const {
    traversal.validate();
    retention.validate();
    if (!(scope.span > 1.0)) throw Error(ErrorCode::InvalidConfig, "scope.span must exceed 1");
    if (feasibility.window < 0) throw Error(ErrorCode::InvalidConfig, "feasibility.window must be >= 0");
    if (annotator.timeout_ms <= 0 || annotator.retries < 0) {
        throw Error(ErrorCode::InvalidConfig, "annotator timeout must be positive and retries non-negative");
    }
    if (verbosity < 0 || verbosity > 3) throw Error(ErrorCode::InvalidConfig, "verbosity must be 0..3");
    if (annotator.spec != "rule" && annotator.spec.rfind("external:", 0) != 0) {
        throw Error(ErrorCode::InvalidConfig, "annotator.spec must be 'rule' or 'external:<url>'");
    }
}

GlobalConfig config_from_json(const nlohmann::json& document) {
    const SchemaReport report = check_document("config", document);
    if (!report.valid) {
        throw Error(ErrorCode::InvalidConfig,
                    "config fails '" + report.keyword + "' at " + (report.pointer.empty() ? "#" : report.pointer));
    }
    GlobalConfig c;
    if (document.contains("rails")) {
        const auto& r = document.at("rails");
        c.rails.high_rails = r.value("high", c.rails.high_rails);
        c.rails.low_rails = r.value("low", c.rails.low_rails);
        c.rails.signal_ports = r.value("signal_ports", c.rails.signal_ports);
    }
    if (document.contains("traversal")) {
        c.traversal.tau_stop = document["traversal"].value("tau_stop", c.traversal.tau_stop);
        c.traversal.epsilon = document["traversal"].value("epsilon", c.traversal.epsilon);
    }
    if (document.contains("retention")) c.retention.k = document["retention"].value("k", c.retention.k);
    if (document.contains("scope")) c.scope.span = document["scope"].value("span", c.scope.span);
    if (document.contains("feasibility")) c.feasibility.window = document["feasibility"].value("window", c.feasibility.window);
    if (document.contains("annotator")) {
        const auto& a = document.at("annotator");
        c.annotator.spec = a.value("spec", c.annotator.spec);
        c.annotator.timeout_ms = a.value("timeout_ms", c.annotator.timeout_ms);
        c.annotator.retries = a.value("retries", c.annotator.retries);
    }
    if (document.contains("paths")) {
        c.cache_dir = document["paths"].value("cache_dir", c.cache_dir);
        c.data_dir = document["paths"].value("data_dir", c.data_dir);
    }
    c.verbosity = document.value("verbosity", c.verbosity);
    c.validate();
    return c;
}

nlohmann::json to_json(const GlobalConfig& c) {
    return {{"rails", {{"high", c.rails.high_rails}, {"low", c.rails.low_rails}, {"signal_ports", c.rails.signal_ports}}},
            {"traversal", {{"tau_stop", c.traversal.tau_stop}, {"epsilon", c.traversal.epsilon}}},
            {"retention", {{"k", c.retention.k}}},
            {"scope", {{"span", c.scope.span}}},
            {"feasibility", {{"window", c.feasibility.window}}},
            {"annotator", {{"spec", c.annotator.spec}, {"timeout_ms", c.annotator.timeout_ms}, {"retries", c.annotator.retries}}},
            {"paths", {{"cache_dir", c.cache_dir}, {"data_dir", c.data_dir}}},
            {"verbosity", c.verbosity}};
}

GlobalConfig load_global_config(const std::optional<std::string>& path) {
    std::optional<std::string> file = path;
    if (!file) {
        if (const char* env = std::getenv("HEART_CONFIG"); env && *env) file = env;
    }
    GlobalConfig c;
    if (file) {
        std::ifstream in(*file);
        if (!in) throw Error(ErrorCode::IoError, "cannot open config " + *file);
        try {
            c = config_from_json(nlohmann::json::parse(in));
        } catch (const nlohmann::json::parse_error& ex) {
            throw Error(ErrorCode::InvalidConfig, *file + ": " + ex.what());
        }
    }
    if (const char* env = std::getenv("HEART_CACHE_DIR"); env && *env) c.cache_dir = env;
    if (c.cache_dir.empty()) c.cache_dir = ".heart-cache";
    return c;
}

}  // namespace heart
