// SPDX-License-Identifier: Apache-2.0
#include "heart/annotator.hpp"
#include "heart/error.hpp"
#include "heart/topo_db.hpp"
#include "heart/traversal.hpp"
#include "heart/tree.hpp"

#include <httplib.h>

#include <regex>

namespace heart {

HttpAnnotator::HttpAnnotator(HttpAnnotatorConfig config) : config_(std::move(config)) {
    static const std::regex url(R"(^http://([^/:]+)(?::(\d+))?(/.*)?$)");
    std::smatch m;
    if (!std::regex_match(config_.endpoint, m, url)) {
        throw Error(ErrorCode::InvalidConfig, "annotator endpoint must look like http://host[:port]/path, got '" +
                                                  config_.endpoint + "'");
    }
    host_ = m[1].str();
    port_ = m[2].matched ? std::stoi(m[2].str()) : 80;
    path_ = m[3].matched ? m[3].str() : "/";
    if (config_.timeout_ms <= 0 || config_.retries < 0) {
        throw Error(ErrorCode::InvalidConfig, "annotator timeout must be positive and retries non-negative");
    }
}

nlohmann::json HttpAnnotator::call(const std::string& op, const nlohmann::json& payload) const {
    httplib::Client client(host_, port_);
    const auto seconds = config_.timeout_ms / 1000;
    const auto micros = (config_.timeout_ms % 1000) * 1000;
    client.set_connection_timeout(seconds, micros);
    client.set_read_timeout(seconds, micros);
    client.set_write_timeout(seconds, micros);
    const std::string body = nlohmann::json{{"op", op}, {"payload", payload}}.dump();
    std::string last_error;
    for (int attempt = 0; attempt <= config_.retries; ++attempt) {
        auto res = client.Post(path_, body, "application/json");
        if (!res) {
            last_error = "transport error: " + httplib::to_string(res.error());
            continue;
        }
        if (res->status != 200) {
            last_error = "HTTP status " + std::to_string(res->status);
            continue;
        }
        try {
            auto doc = nlohmann::json::parse(res->body);
            if (!doc.contains("result")) throw Error(ErrorCode::AnnotatorFailure, op + ": response lacks 'result'");
            return doc.at("result");
        } catch (const nlohmann::json::exception& ex) {
            last_error = std::string("malformed response: ") + ex.what();
        }
    }
    throw Error(ErrorCode::AnnotatorFailure, op + " failed after " + std::to_string(config_.retries + 1) +
                                                 " attempt(s): " + last_error);
}

namespace {

template <typename F>
auto decode(const std::string& op, F&& f) {
    try {
        return f();
    } catch (const nlohmann::json::exception& ex) {
        throw Error(ErrorCode::AnnotatorFailure, op + ": response violates schema: " + ex.what());
    } catch (const Error& ex) {
        if (ex.code() == ErrorCode::AnnotatorFailure) throw;
        throw Error(ErrorCode::AnnotatorFailure, op + ": " + ex.what());
    }
}

}  // namespace

RoleAnnotation HttpAnnotator::classify_role(const FragmentInfo& fragment, const GlobalContext& global) const {
    nlohmann::json payload{{"fragment", to_json(fragment)},
                           {"global", {{"digest", global.digest},
                                       {"netlist", global.netlist ? serialize_netlist(*global.netlist) : std::string()}}}};
    const auto result = call("classify_role", payload);
    return decode("classify_role", [&] {
        RoleAnnotation a{result.at("role").get<std::string>(), result.at("description").get<std::string>()};
        if (a.role.empty()) throw Error(ErrorCode::AnnotatorFailure, "classify_role returned an empty role");
        return a;
    });
}

std::vector<LoopAnnotation> HttpAnnotator::detect_loops(const std::vector<ChildSummary>& children,
                                                        const GlobalContext& global) const {
    nlohmann::json kids = nlohmann::json::array();
    for (const auto& c : children) kids.push_back(to_json(c));
    const auto result = call("detect_loops", {{"children", kids}, {"global", {{"digest", global.digest}}}});
    return decode("detect_loops", [&] {
        std::vector<LoopAnnotation> loops;
        for (const auto& l : result) {
            loops.push_back({l.at("members").get<std::vector<std::string>>(), l.value("polarity_hint", std::string())});
        }
        return loops;
    });
}

EdgeWeights HttpAnnotator::weigh_edges(std::string_view query, const ReasoningTree& tree) const {
    const auto result = call("weigh_edges", {{"query", std::string(query)}, {"tree", save_tree(tree)}});
    EdgeWeights weights = decode("weigh_edges", [&] {
        EdgeWeights w;
        for (const auto& e : result) {
            const TreeEdge edge{e.at("parent").get<std::string>(), e.at("child").get<std::string>()};
            w.weights[edge] = e.at("weight").get<double>();
            w.rationales[edge] = e.at("rationale").get<std::string>();
        }
        return w;
    });
    validate_weights(weights, tree);
    return weights;
}

RetrievalQuery HttpAnnotator::parse_query(std::string_view query, const std::vector<std::string>& metrics) const {
    const auto result = call("parse_query", {{"query", std::string(query)}, {"metrics", metrics}});
    RetrievalQuery parsed = decode("parse_query", [&] { return query_from_json(result); });
    return parsed;
}

std::unique_ptr<AnnotatorPort> make_annotator(const std::string& spec, int timeout_ms, int retries) {
    if (spec == "rule") return std::make_unique<RuleAnnotator>();
    const std::string prefix = "external:";
    if (spec.rfind(prefix, 0) == 0) {
        return std::make_unique<HttpAnnotator>(HttpAnnotatorConfig{spec.substr(prefix.size()), timeout_ms, retries});
    }
    throw Error(ErrorCode::InvalidConfig, "annotator must be 'rule' or 'external:<endpoint>', got '" + spec + "'");
}

}  // namespace heart
