// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <nlohmann/json_fwd.hpp>

#include <string>
#include <vector>

namespace heart {

// Names of the JSON schemas compiled into the library.
std::vector<std::string> schema_names();

// Schema text; throws InvalidConfig for an unknown name.
const std::string& schema_text(const std::string& name);

struct SchemaReport {
    bool valid = true;
    std::string pointer;  // JSON pointer into the document
    std::string keyword;  // failing schema keyword
};

SchemaReport check_document(const std::string& name, const nlohmann::json& document);

// Throws SchemaError with the failing location.
void validate_document(const std::string& name, const nlohmann::json& document);

}  // namespace heart
