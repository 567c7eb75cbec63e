// SPDX-License-Identifier: Apache-2.0
#include "fixtures.hpp"

#include "heart/config.hpp"
#include "heart/error.hpp"
#include "heart/schema.hpp"

#include <doctest.h>
#include <nlohmann/json.hpp>

#include <cstdlib>
#include <fstream>

using namespace heart;

TEST_CASE("shipped schemas") {
    const auto names = schema_names();
    for (const char* expected : {"graph", "decomposition", "tree", "trace", "knowledge_table", "query", "retention",
                                 "run_record", "config"}) {
        CAPTURE(expected);
        CHECK(std::find(names.begin(), names.end(), expected) != names.end());
    }
    for (const auto& n : names) {
        CAPTURE(n);
        CHECK_NOTHROW(nlohmann::json::parse(schema_text(n)));
    }
    CHECK_THROWS_AS(schema_text("nope"), Error);
}

TEST_CASE("schema reports point at the failure") {
    auto doc = to_json(GlobalConfig{});
    CHECK(check_document("config", doc).valid);
    doc["traversal"]["tau_stop"] = "high";
    const auto report = check_document("config", doc);
    CHECK_FALSE(report.valid);
    CHECK(report.pointer.find("/traversal/tau_stop") != std::string::npos);
    CHECK_FALSE(report.keyword.empty());
    CHECK_THROWS_AS(validate_document("config", doc), Error);
}

TEST_CASE("global config parsing") {
    auto c = config_from_json({{"traversal", {{"tau_stop", 0.4}}}, {"retention", {{"k", 2.0}}}});
    CHECK(c.traversal.tau_stop == 0.4);
    CHECK(c.retention.k == 2.0);
    CHECK(config_from_json(to_json(c)).traversal.tau_stop == 0.4);
    CHECK_THROWS_AS(config_from_json({{"traversl", nlohmann::json::object()}}), Error);
    CHECK_THROWS_AS(config_from_json({{"traversal", {{"tau_stop", 2.0}}}}), Error);
    CHECK_THROWS_AS(config_from_json({{"annotator", {{"spec", "gpt"}}}}), Error);
    CHECK_THROWS_AS(config_from_json({{"scope", {{"span", 1.0}}}}), Error);
}

TEST_CASE("environment overrides") {
    const auto dir = heart::testing::scratch_dir("config-env");
    const std::string path = dir + "/config.json";
    std::ofstream(path) << R"({"traversal": {"epsilon": 0.1}})";
    setenv("HEART_CONFIG", path.c_str(), 1);
    setenv("HEART_CACHE_DIR", (dir + "/cache").c_str(), 1);
    auto c = load_global_config();
    CHECK(c.traversal.epsilon == 0.1);
    CHECK(c.cache_dir == dir + "/cache");
    unsetenv("HEART_CONFIG");
    c = load_global_config();
    CHECK(c.traversal.epsilon == TraversalConfig{}.epsilon);
    unsetenv("HEART_CACHE_DIR");
    CHECK_THROWS_AS(load_global_config(dir + "/missing.json"), Error);
}
