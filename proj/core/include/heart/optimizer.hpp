// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "heart/traversal.hpp"

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace heart {

using Metrics = std::map<std::string, double>;

struct DesignPoint {
    std::vector<std::pair<std::string, double>> variables;
    std::map<std::string, double> frozen;
    std::string topology_id;

    // Variables and frozen values in one map.
    std::map<std::string, double> values() const;
    std::optional<double> value(const std::string& name) const;
};

// Box-bounded design space. Optimizers work on the unit cube; log-scaled
// variables map geometrically between their bounds.
struct SearchSpace {
    std::vector<DesignVariable> variables;
    std::map<std::string, double> frozen;
    std::string topology_id;

    void validate() const;  // DegenerateBounds, InvalidConfig
    std::size_t dimension() const { return variables.size(); }
    double to_value(std::size_t j, double u) const;
    double to_unit(std::size_t j, double value) const;
    DesignPoint point(const std::vector<double>& unit) const;
    std::vector<double> reference_unit() const;

    static SearchSpace from_scope(const ScopedVariableSet& scope, std::string topology_id = {});
};

class Evaluator {
public:
    virtual ~Evaluator() = default;
    virtual Metrics evaluate(const DesignPoint& point) = 0;
    // Higher is better.
    virtual double fom(const Metrics& metrics) const = 0;
    virtual bool concurrent_safe() const { return false; }

    // Counted evaluation; every optimizer call goes through here.
    Metrics run(const DesignPoint& point) {
        ++calls_;
        return evaluate(point);
    }
    std::size_t calls() const { return calls_; }
    void reset_calls() { calls_ = 0; }

private:
    std::size_t calls_ = 0;
};

struct HistoryEntry {
    std::size_t eval = 0;  // 1-based
    DesignPoint point;
    Metrics metrics;
    double fom = 0.0;
    double best_fom = 0.0;
    std::optional<double> pckri;
};

struct RunRecord {
    std::string optimizer;
    std::uint64_t seed = 0;
    std::size_t budget = 0;
    nlohmann::json config = nlohmann::json::object();
    SearchSpace space;
    std::vector<HistoryEntry> history;
    std::size_t best_index = 0;
    nlohmann::json trace;  // reasoning trace when run from a scenario
    nlohmann::json extra = nlohmann::json::object();

    const HistoryEntry& best() const { return history.at(best_index); }
    // First eval whose best-so-far reaches final_best - (1 - fraction)|final_best|.
    std::size_t evals_to_fraction(double fraction = 0.95) const;
};

struct RunOptions {
    std::size_t budget = 200;
    std::uint64_t seed = 0;
    // PCKRI of a design against the scenario reference; empty when unused.
    std::function<std::optional<double>(const DesignPoint&)> retention;
};

struct BoConfig {
    std::size_t initial = 10;
    double kappa = 2.0;
    std::size_t random_candidates = 256;
    bool include_reference = true;
};

struct DeConfig {
    std::size_t population = 0;  // 0 picks max(8, 2d), capped by the budget
    double F = 0.8;
    double CR = 0.9;
    std::string strategy = "rand1";  // "rand1" | "best1" | "current_to_best1"
    bool include_reference = true;
};

struct OptimizerChoice {
    std::string kind = "bo";  // "bo" | "de"
    BoConfig bo;
    DeConfig de;
};

OptimizerChoice optimizer_from_json(const nlohmann::json& document);

RunRecord ucb_bo(const SearchSpace& space, Evaluator& evaluator, const RunOptions& options, const BoConfig& cfg = {});
RunRecord differential_evolution(const SearchSpace& space, Evaluator& evaluator, const RunOptions& options,
                                 const DeConfig& cfg = {});
RunRecord optimize(const SearchSpace& space, Evaluator& evaluator, const RunOptions& options,
                   const OptimizerChoice& choice);

nlohmann::json to_json(const RunRecord& record);

// Matern-5/2 Gaussian process on the unit cube with standardized outputs
// and jitter 1e-6. The isotropic lengthscale maximizes the profiled marginal
// likelihood over a fixed grid.
class GaussianProcess {
public:
    void fit(const std::vector<std::vector<double>>& x, const std::vector<double>& y);
    // Mean and standard deviation in the original output units.
    std::pair<double, double> predict(const std::vector<double>& x) const;
    // Batched prediction; rows of `x` are points.
    void predict(const Eigen::MatrixXd& x, Eigen::VectorXd& mean, Eigen::VectorXd& sd) const;
    double lengthscale() const { return lengthscale_; }

private:
    Eigen::MatrixXd kernel(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, double ell) const;

    Eigen::MatrixXd x_;
    Eigen::LLT<Eigen::MatrixXd> llt_;
    Eigen::VectorXd alpha_;
    double lengthscale_ = 0.5;
    double signal_ = 1.0;
    double y_mean_ = 0.0;
    double y_scale_ = 1.0;
};

}  // namespace heart
