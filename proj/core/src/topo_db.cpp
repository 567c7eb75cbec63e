// SPDX-License-Identifier: Apache-2.0
#include "heart/topo_db.hpp"

#include "heart/annotator.hpp"
#include "heart/error.hpp"
#include "heart/netlist.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <set>

namespace heart {

const TopologyRecord* KnowledgeTable::find(const std::string& topo_id) const {
    for (const auto& r : rows) {
        if (r.topo_id == topo_id) return &r;
    }
    return nullptr;
}

bool KnowledgeTable::has_metric(const std::string& metric) const {
    return std::find(metrics.begin(), metrics.end(), metric) != metrics.end();
}

std::string_view to_string(Tone tone) {
    switch (tone) {
    case Tone::Strict: return "STRICT";
    case Tone::Relaxed: return "RELAXED";
    case Tone::DontCare: return "DONT_CARE";
    }
    return "DONT_CARE";
}

namespace {

Tone tone_from_string(const std::string& text) {
    if (text == "STRICT") return Tone::Strict;
    if (text == "RELAXED") return Tone::Relaxed;
    if (text == "DONT_CARE") return Tone::DontCare;
    throw Error(ErrorCode::SchemaError, "unknown tone '" + text + "'");
}

// Scores closer than this are treated as equal before the tie-breaks apply.
bool same_score(double a, double b) {
    return std::fabs(a - b) <= 1e-9 * std::max(1.0, std::max(std::fabs(a), std::fabs(b)));
}

int rank_sum(const TopologyRecord& record) {
    int sum = 0;
    for (const auto& [m, r] : record.ranks) sum += r;
    return sum;
}

}  // namespace

void RetrievalQuery::normalize() {
    if (objectives.empty()) throw Error(ErrorCode::NoObjectiveFound, "query names no objective metric");
    std::set<std::string> s;
    double total = 0.0;
    for (const auto& o : objectives) {
        if (!(o.weight > 0.0) || !std::isfinite(o.weight)) {
            throw Error(ErrorCode::InvalidConfig, "objective '" + o.metric + "' needs a positive weight");
        }
        if (!s.insert(o.metric).second) throw Error(ErrorCode::InvalidConfig, "objective '" + o.metric + "' repeated");
        total += o.weight;
    }
    std::set<std::string> u;
    for (const auto& c : constraints) {
        if (s.count(c.metric)) {
            throw Error(ErrorCode::InvalidConfig, "metric '" + c.metric + "' is both an objective and a constraint");
        }
        if (!u.insert(c.metric).second) throw Error(ErrorCode::InvalidConfig, "constraint '" + c.metric + "' repeated");
    }
    for (auto& o : objectives) o.weight /= total;
}

RankValidationReport validate_ranks(const KnowledgeTable& table) {
    RankValidationReport report;
    const int n = static_cast<int>(table.rows.size());
    for (const auto& metric : table.metrics) {
        std::vector<int> count(static_cast<std::size_t>(n) + 1, 0);
        for (const auto& row : table.rows) {
            auto it = row.ranks.find(metric);
            if (it == row.ranks.end()) {
                report.problems.push_back("MissingRank: " + row.topo_id + " has no rank for " + metric);
                continue;
            }
            if (it->second < 1 || it->second > n) {
                report.problems.push_back("MissingRank: " + row.topo_id + " rank " + std::to_string(it->second) +
                                          " for " + metric + " outside 1.." + std::to_string(n));
                continue;
            }
            if (++count[static_cast<std::size_t>(it->second)] == 2) {
                report.problems.push_back("RankCollision: rank " + std::to_string(it->second) + " repeated in " + metric);
            }
        }
    }
    for (const auto& row : table.rows) {
        for (const auto& [metric, r] : row.ranks) {
            if (!table.has_metric(metric)) {
                report.problems.push_back("UnknownMetric: " + row.topo_id + " ranks unlisted metric " + metric);
            }
        }
    }
    report.ok = report.problems.empty();
    return report;
}

KnowledgeTable ingest_table(const nlohmann::json& document) {
    KnowledgeTable table;
    try {
        table.category = document.at("category").get<std::string>();
        table.metrics = document.at("metrics").get<std::vector<std::string>>();
        for (const auto& jr : document.at("topologies")) {
            TopologyRecord r;
            r.topo_id = jr.at("topo_id").get<std::string>();
            r.ranks = jr.at("ranks").get<std::map<std::string, int>>();
            r.netlist_template = jr.value("netlist_template", std::string());
            r.notes = jr.value("notes", std::string());
            table.rows.push_back(std::move(r));
        }
    } catch (const nlohmann::json::exception& ex) {
        throw Error(ErrorCode::SchemaError, std::string("knowledge table: ") + ex.what());
    }
    std::set<std::string> unique(table.metrics.begin(), table.metrics.end());
    if (unique.size() != table.metrics.size()) throw Error(ErrorCode::SchemaError, "duplicate metric names");
    std::set<std::string> ids;
    for (const auto& r : table.rows) {
        if (!ids.insert(r.topo_id).second) throw Error(ErrorCode::SchemaError, "duplicate topo_id " + r.topo_id);
    }
    const auto report = validate_ranks(table);
    for (const auto& p : report.problems) {
        if (p.rfind("MissingRank", 0) == 0) throw Error(ErrorCode::MissingRank, p.substr(p.find(' ') + 1));
    }
    for (const auto& p : report.problems) {
        if (p.rfind("RankCollision", 0) == 0) throw Error(ErrorCode::RankCollision, p.substr(p.find(' ') + 1));
        throw Error(ErrorCode::UnknownMetric, p.substr(p.find(' ') + 1));
    }
    return table;
}

KnowledgeTable load_table_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::IoError, "cannot open " + path);
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& ex) {
        throw Error(ErrorCode::SchemaError, path + ": " + ex.what());
    }
    return ingest_table(doc);
}

nlohmann::json to_json(const KnowledgeTable& table) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& r : table.rows) {
        rows.push_back({{"topo_id", r.topo_id}, {"ranks", r.ranks}, {"netlist_template", r.netlist_template}, {"notes", r.notes}});
    }
    return {{"category", table.category}, {"metrics", table.metrics}, {"topologies", rows}};
}

std::vector<const TopologyRecord*> feasible_region(const KnowledgeTable& table, const RetrievalQuery& query,
                                                   const FeasibilityConfig& cfg) {
    for (const auto& c : query.constraints) {
        if (!table.has_metric(c.metric)) throw Error(ErrorCode::UnknownMetric, "constraint metric '" + c.metric + "'");
    }
    std::vector<const TopologyRecord*> out;
    for (const auto& row : table.rows) {
        bool ok = true;
        for (const auto& c : query.constraints) {
            if (c.tone != Tone::Strict || !c.prior_rank) continue;
            if (std::abs(row.ranks.at(c.metric) - *c.prior_rank) > cfg.window) {
                ok = false;
                break;
            }
        }
        if (ok) out.push_back(&row);
    }
    return out;
}

double fom_rank(const TopologyRecord& record, const RetrievalQuery& query) {
    double score = 0.0;
    for (const auto& o : query.objectives) {
        auto it = record.ranks.find(o.metric);
        if (it == record.ranks.end()) throw Error(ErrorCode::UnknownMetric, "objective metric '" + o.metric + "'");
        score += o.weight * it->second;
    }
    return score;
}

std::vector<RetrievalHit> retrieve(const KnowledgeTable& table, const RetrievalQuery& query, std::size_t k,
                                   const FeasibilityConfig& cfg) {
    if (k == 0) throw Error(ErrorCode::InvalidConfig, "k must be at least 1");
    if (table.rows.empty()) throw Error(ErrorCode::InvalidConfig, "knowledge table '" + table.category + "' is empty");
    for (const auto& o : query.objectives) {
        if (!table.has_metric(o.metric)) throw Error(ErrorCode::UnknownMetric, "objective metric '" + o.metric + "'");
    }
    const auto feasible = feasible_region(table, query, cfg);
    if (feasible.empty()) throw Error(ErrorCode::EmptyFeasibleRegion, "no topology satisfies the strict constraints");
    std::vector<RetrievalHit> hits;
    for (const auto* row : feasible) hits.push_back({row, fom_rank(*row, query), rank_sum(*row), false});
    std::sort(hits.begin(), hits.end(), [](const RetrievalHit& a, const RetrievalHit& b) {
        if (!same_score(a.score, b.score)) return a.score < b.score;
        if (a.rank_sum != b.rank_sum) return a.rank_sum < b.rank_sum;
        return a.record->topo_id < b.record->topo_id;
    });
    const double best = hits.front().score;
    for (auto& h : hits) h.near_best = h.score <= best * 1.05 || same_score(h.score, best);
    if (hits.size() > k) hits.resize(k);
    return hits;
}

namespace {

std::vector<std::string> words(const std::string& text) {
    std::vector<std::string> out;
    std::string cur;
    for (unsigned char ch : text) {
        if (std::isalnum(ch)) {
            cur.push_back(static_cast<char>(std::tolower(ch)));
        } else if (!cur.empty()) {
            out.push_back(cur);
            cur.clear();
        }
    }
    if (!cur.empty()) out.push_back(cur);
    for (auto& w : out) {
        if (w.size() > 3 && w.back() == 's' && w[w.size() - 2] != 's') w.pop_back();
    }
    return out;
}

std::vector<std::vector<std::string>> aliases_for(const std::string& metric) {
    static const std::map<std::string, std::vector<std::string>> extra{
        {"noise", {"snr"}},
        {"area", {"size", "footprint"}},
        {"offset", {"mismatch"}},
        {"bandwidth", {"speed", "gbw", "ugb", "ugbw"}},
        {"power", {"iq", "consumption", "current"}},
        {"phase_margin", {"stability"}},
        {"slew_rate", {"slew"}},
        {"swing", {"headroom"}},
        {"delay", {"latency"}},
    };
    std::string spaced = lower(metric);
    std::replace(spaced.begin(), spaced.end(), '_', ' ');
    std::vector<std::vector<std::string>> out{words(spaced)};
    if (auto it = extra.find(lower(metric)); it != extra.end()) {
        for (const auto& a : it->second) out.push_back(words(a));
    }
    return out;
}

bool contains_sequence(const std::vector<std::string>& hay, const std::vector<std::string>& needle) {
    if (needle.empty() || needle.size() > hay.size()) return false;
    for (std::size_t i = 0; i + needle.size() <= hay.size(); ++i) {
        if (std::equal(needle.begin(), needle.end(), hay.begin() + static_cast<long>(i))) return true;
    }
    return false;
}

std::vector<std::string> split_clauses(const std::string& text) {
    std::vector<std::string> clauses;
    std::string cur;
    for (char ch : text) {
        if (ch == ';' || ch == ',' || ch == '.' || ch == '\n') {
            clauses.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(ch);
        }
    }
    clauses.push_back(cur);
    // Contrastive connectives also open a new clause.
    std::vector<std::string> out;
    for (const auto& c : clauses) {
        std::string rest = c;
        for (;;) {
            const std::string low = lower(rest);
            std::size_t cut = std::string::npos;
            std::size_t len = 0;
            for (const std::string word : {" while ", " but ", " whereas "}) {
                auto p = low.find(word);
                if (p != std::string::npos && p < cut) {
                    cut = p;
                    len = word.size();
                }
            }
            if (cut == std::string::npos) break;
            out.push_back(rest.substr(0, cut));
            rest = rest.substr(cut + len);
        }
        out.push_back(rest);
    }
    return out;
}

std::optional<Tone> clause_tone(const std::string& clause) {
    const std::string low = lower(clause);
    const auto w = words(clause);
    auto has_word = [&](const char* word) { return std::find(w.begin(), w.end(), word) != w.end(); };
    if (low.find("don't care") != std::string::npos || low.find("dont care") != std::string::npos ||
        low.find("do not care") != std::string::npos || has_word("irrelevant")) {
        return Tone::DontCare;
    }
    if (low.find("relax") != std::string::npos || low.find("tolerate") != std::string::npos ||
        has_word("loose") || has_word("flexible") || has_word("secondary")) {
        return Tone::Relaxed;
    }
    if (has_word("must") || low.find("at least") != std::string::npos || low.find("at most") != std::string::npos ||
        low.find(">=") != std::string::npos || low.find("<=") != std::string::npos ||
        low.find("\xe2\x89\xa5") != std::string::npos || low.find("\xe2\x89\xa4") != std::string::npos ||
        has_word("strict") || has_word("strictly") || has_word("maintain") || has_word("maintaining") ||
        has_word("keep") || has_word("keeping") || has_word("same") || has_word("fixed") || has_word("preserve")) {
        return Tone::Strict;
    }
    return std::nullopt;
}

}  // namespace

RetrievalQuery keyword_parse_query(const std::string& text, const std::vector<std::string>& metrics) {
    std::vector<std::string> objectives;
    std::map<std::string, Tone> tones;
    for (const auto& clause : split_clauses(text)) {
        const auto w = words(clause);
        if (w.empty()) continue;
        const auto tone = clause_tone(clause);
        for (const auto& metric : metrics) {
            const auto aliases = aliases_for(metric);
            const bool hit = std::any_of(aliases.begin(), aliases.end(),
                                         [&](const std::vector<std::string>& a) { return contains_sequence(w, a); });
            if (!hit) continue;
            if (tone) {
                tones.emplace(metric, *tone);
            } else if (std::find(objectives.begin(), objectives.end(), metric) == objectives.end()) {
                objectives.push_back(metric);
            }
        }
    }
    if (objectives.empty()) {
        throw Error(ErrorCode::NoObjectiveFound, "no objective metric recognised in \"" + text + "\"");
    }
    RetrievalQuery query;
    for (const auto& metric : metrics) {
        if (std::find(objectives.begin(), objectives.end(), metric) != objectives.end()) {
            query.objectives.push_back({metric, 1.0});
            continue;
        }
        auto it = tones.find(metric);
        query.constraints.push_back({metric, it == tones.end() ? Tone::DontCare : it->second, std::nullopt});
    }
    query.normalize();
    return query;
}

RetrievalQuery parse_retrieval_query(const std::string& text, const KnowledgeTable& table,
                                     const AnnotatorPort& annotator,
                                     const std::optional<std::string>& reference_topology) {
    RetrievalQuery query = annotator.parse_query(text, table.metrics);
    std::set<std::string> mentioned;
    for (const auto& o : query.objectives) {
        if (!table.has_metric(o.metric)) throw Error(ErrorCode::UnknownMetric, "objective metric '" + o.metric + "'");
        mentioned.insert(o.metric);
    }
    for (const auto& c : query.constraints) {
        if (!table.has_metric(c.metric)) throw Error(ErrorCode::UnknownMetric, "constraint metric '" + c.metric + "'");
        mentioned.insert(c.metric);
    }
    for (const auto& m : table.metrics) {
        if (!mentioned.count(m)) query.constraints.push_back({m, Tone::DontCare, std::nullopt});
    }
    if (reference_topology) {
        const TopologyRecord* ref = table.find(*reference_topology);
        if (!ref) throw Error(ErrorCode::InvalidConfig, "reference topology '" + *reference_topology + "' not in table");
        for (auto& c : query.constraints) c.prior_rank = ref->ranks.at(c.metric);
        query.reference_topology = reference_topology;
    }
    query.normalize();
    return query;
}

nlohmann::json to_json(const RetrievalQuery& query) {
    nlohmann::json objectives = nlohmann::json::array();
    for (const auto& o : query.objectives) objectives.push_back({{"metric", o.metric}, {"weight", o.weight}});
    nlohmann::json constraints = nlohmann::json::array();
    for (const auto& c : query.constraints) {
        nlohmann::json jc{{"metric", c.metric}, {"tone", to_string(c.tone)}};
        if (c.prior_rank) jc["prior_rank"] = *c.prior_rank;
        constraints.push_back(jc);
    }
    nlohmann::json out{{"objectives", objectives}, {"constraints", constraints}};
    if (query.reference_topology) out["reference_topology"] = *query.reference_topology;
    return out;
}

RetrievalQuery query_from_json(const nlohmann::json& document) {
    RetrievalQuery query;
    try {
        for (const auto& o : document.at("objectives")) {
            query.objectives.push_back({o.at("metric").get<std::string>(), o.value("weight", 1.0)});
        }
        for (const auto& c : document.value("constraints", nlohmann::json::array())) {
            Constraint con{c.at("metric").get<std::string>(), tone_from_string(c.value("tone", std::string("DONT_CARE"))),
                           std::nullopt};
            if (c.contains("prior_rank") && !c.at("prior_rank").is_null()) con.prior_rank = c.at("prior_rank").get<int>();
            query.constraints.push_back(con);
        }
        if (document.contains("reference_topology")) {
            query.reference_topology = document.at("reference_topology").get<std::string>();
        }
    } catch (const nlohmann::json::exception& ex) {
        throw Error(ErrorCode::SchemaError, std::string("query document: ") + ex.what());
    }
    return query;
}

}  // namespace heart
