// SPDX-License-Identifier: Apache-2.0
#include "heart/schema.hpp"

#include "heart/error.hpp"

#include <nlohmann/json.hpp>
#include <rapidjson/document.h>
#include <rapidjson/schema.h>
#include <rapidjson/stringbuffer.h>

#include <map>
#include <memory>
#include <mutex>

namespace heart {

namespace detail {
const std::map<std::string, std::string>& embedded_schemas();
}

namespace {

// Compiled schemas are built once and shared.
const rapidjson::SchemaDocument& compiled(const std::string& name) {
    static std::mutex mutex;
    static std::map<std::string, std::unique_ptr<rapidjson::SchemaDocument>> cache;
    std::lock_guard<std::mutex> lock(mutex);
    auto it = cache.find(name);
    if (it != cache.end()) return *it->second;
    rapidjson::Document d;
    d.Parse(schema_text(name).c_str());
    if (d.HasParseError()) throw Error(ErrorCode::InvariantViolation, "embedded schema " + name + " does not parse");
    auto doc = std::make_unique<rapidjson::SchemaDocument>(d);
    return *cache.emplace(name, std::move(doc)).first->second;
}

}  // namespace

std::vector<std::string> schema_names() {
    std::vector<std::string> names;
    for (const auto& [name, text] : detail::embedded_schemas()) names.push_back(name);
    return names;
}

const std::string& schema_text(const std::string& name) {
    const auto& all = detail::embedded_schemas();
    auto it = all.find(name);
    if (it == all.end()) throw Error(ErrorCode::InvalidConfig, "no schema named '" + name + "'");
    return it->second;
}

SchemaReport check_document(const std::string& name, const nlohmann::json& document) {
    const auto& schema = compiled(name);
    rapidjson::Document d;
    const std::string text = document.dump();
    d.Parse(text.c_str());
    rapidjson::SchemaValidator validator(schema);
    SchemaReport report;
    if (!d.Accept(validator)) {
        report.valid = false;
        rapidjson::StringBuffer where;
        validator.GetInvalidDocumentPointer().StringifyUriFragment(where);
        report.pointer = where.GetString();
        report.keyword = validator.GetInvalidSchemaKeyword();
    }
    return report;
}

void validate_document(const std::string& name, const nlohmann::json& document) {
    const SchemaReport report = check_document(name, document);
    if (!report.valid) {
        throw Error(ErrorCode::SchemaError,
                    name + " document fails '" + report.keyword + "' at " + (report.pointer.empty() ? "#" : report.pointer));
    }
}

}  // namespace heart
