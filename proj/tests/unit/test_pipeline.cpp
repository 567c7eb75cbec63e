// SPDX-License-Identifier: Apache-2.0
#include "fixtures.hpp"

#include "heart/annotator.hpp"
#include "heart/error.hpp"
#include "heart/pipeline.hpp"
#include "heart/schema.hpp"

#include <doctest.h>
#include <nlohmann/json.hpp>

#include <filesystem>

using namespace heart;
using heart::testing::data_path;
using heart::testing::read_text;

namespace {

GlobalConfig scratch_config(const std::string& tag) {
    GlobalConfig c;
    c.cache_dir = heart::testing::scratch_dir(tag);
    return c;
}

}  // namespace

TEST_CASE("sha256") {
    CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("second run reuses the offline stages") {
    const auto cfg = scratch_config("pipeline-cache");
    RuleAnnotator rule;
    const auto source = read_text(data_path("circuits/afe_s2.sp"));
    PipelineOptions opt;
    opt.query = "reduce noise";
    const auto first = run_pipeline(source, cfg, rule, opt);
    CHECK_FALSE(first.offline_hit);
    CHECK_FALSE(first.trace_hit);
    REQUIRE(first.artifacts.size() == 5);
    const char* schemas[] = {nullptr, "graph", "decomposition", "tree", "trace"};
    for (std::size_t i = 0; i < first.artifacts.size(); ++i) {
        CAPTURE(first.artifacts[i]);
        CHECK(std::filesystem::exists(first.artifacts[i]));
        if (schemas[i]) CHECK(check_document(schemas[i], nlohmann::json::parse(read_text(first.artifacts[i]))).valid);
    }

    const auto second = run_pipeline(source, cfg, rule, opt);
    CHECK(second.cache_key == first.cache_key);
    CHECK(second.offline_hit);
    CHECK(second.trace_hit);
    CHECK(to_json(*second.trace) == to_json(*first.trace));

    opt.query = "reduce power";
    const auto third = run_pipeline(source, cfg, rule, opt);
    CHECK(third.offline_hit);
    CHECK_FALSE(third.trace_hit);

    // Any change to the source invalidates the key.
    const auto edited = run_pipeline(source + "R9 out gnd 1k\n", cfg, rule, opt);
    CHECK(edited.cache_key != first.cache_key);
    CHECK_FALSE(edited.offline_hit);
}

TEST_CASE("offline only stops after the tree") {
    const auto cfg = scratch_config("pipeline-offline");
    RuleAnnotator rule;
    PipelineOptions opt;
    opt.query = "reduce noise";
    opt.offline_only = true;
    const auto r = run_pipeline(read_text(data_path("circuits/ota5t.sp")), cfg, rule, opt);
    CHECK(r.artifacts.size() == 4);
    CHECK_FALSE(r.trace.has_value());
}

TEST_CASE("stage failures name the stage") {
    const auto cfg = scratch_config("pipeline-error");
    RuleAnnotator rule;
    try {
        run_pipeline("M1 a b c\n", cfg, rule, {});
        FAIL("expected a parse failure");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::SyntaxError);
        CHECK(std::string(e.what()).find("stage parse") != std::string::npos);
    }
}
