// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <nlohmann/json_fwd.hpp>

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace heart {

class AnnotatorPort;

struct TopologyRecord {
    std::string topo_id;
    std::map<std::string, int> ranks;  // metric -> rank, 1 = best
    std::string netlist_template;      // SPICE `.subckt` text
    std::string notes;
};

// Pre-ranked topologies of one functional category. Each metric column is a
// permutation of 1..N.
struct KnowledgeTable {
    std::string category;
    std::vector<std::string> metrics;
    std::vector<TopologyRecord> rows;

    const TopologyRecord* find(const std::string& topo_id) const;
    bool has_metric(const std::string& metric) const;
};

enum class Tone { Strict, Relaxed, DontCare };

std::string_view to_string(Tone tone);

struct Objective {
    std::string metric;
    double weight = 1.0;
};

struct Constraint {
    std::string metric;
    Tone tone = Tone::DontCare;
    std::optional<int> prior_rank;
};

struct RetrievalQuery {
    std::vector<Objective> objectives;    // S
    std::vector<Constraint> constraints;  // U
    std::optional<std::string> reference_topology;

    // Weights rescaled to sum to one; throws NoObjectiveFound when empty and
    // InvalidConfig on non-positive weights or S/U overlap.
    void normalize();
};

// Validation failures: RankCollision, MissingRank, SchemaError.
KnowledgeTable ingest_table(const nlohmann::json& document);
KnowledgeTable load_table_file(const std::string& path);
nlohmann::json to_json(const KnowledgeTable& table);

struct RankValidationReport {
    bool ok = true;
    std::vector<std::string> problems;
};

RankValidationReport validate_ranks(const KnowledgeTable& table);

struct FeasibilityConfig {
    int window = 3;  // |r_j - prior_j| <= window for strict constraints
};

std::vector<const TopologyRecord*> feasible_region(const KnowledgeTable& table, const RetrievalQuery& query,
                                                   const FeasibilityConfig& cfg = {});

// Sum of w_i * r_i over the objectives; lower is better.
double fom_rank(const TopologyRecord& record, const RetrievalQuery& query);

struct RetrievalHit {
    const TopologyRecord* record = nullptr;
    double score = 0.0;
    int rank_sum = 0;
    bool near_best = false;  // within 5% of the best score
};

// Feasible rows by (score, sum of all ranks, topo_id); at most k of them.
std::vector<RetrievalHit> retrieve(const KnowledgeTable& table, const RetrievalQuery& query, std::size_t k,
                                   const FeasibilityConfig& cfg = {});

// Objectives, tones and weights via the annotator; priors are filled from the
// reference topology row when the query names one.
RetrievalQuery parse_retrieval_query(const std::string& text, const KnowledgeTable& table,
                                     const AnnotatorPort& annotator,
                                     const std::optional<std::string>& reference_topology = std::nullopt);

// Deterministic keyword/tone reading used by the rule annotator.
RetrievalQuery keyword_parse_query(const std::string& text, const std::vector<std::string>& metrics);

nlohmann::json to_json(const RetrievalQuery& query);
RetrievalQuery query_from_json(const nlohmann::json& document);

}  // namespace heart
