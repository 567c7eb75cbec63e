// SPDX-License-Identifier: Apache-2.0
#include "heart/optimizer.hpp"

#include "heart/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>

namespace heart {

std::map<std::string, double> DesignPoint::values() const {
    std::map<std::string, double> out = frozen;
    for (const auto& [name, v] : variables) out[name] = v;
    return out;
}

std::optional<double> DesignPoint::value(const std::string& name) const {
    for (const auto& [n, v] : variables) {
        if (n == name) return v;
    }
    if (auto it = frozen.find(name); it != frozen.end()) return it->second;
    return std::nullopt;
}

void SearchSpace::validate() const {
    if (variables.empty()) throw Error(ErrorCode::EmptyScope, "search space has no variables");
    std::set<std::string> names;
    for (const auto& v : variables) {
        if (!names.insert(v.name).second) throw Error(ErrorCode::InvalidConfig, "variable " + v.name + " repeated");
        if (frozen.count(v.name)) throw Error(ErrorCode::InvalidConfig, "variable " + v.name + " is also frozen");
        if (!std::isfinite(v.lower) || !std::isfinite(v.upper) || !(v.lower < v.upper)) {
            throw Error(ErrorCode::DegenerateBounds, "variable " + v.name + " has empty or infinite bounds");
        }
        if (v.log_scale && !(v.lower > 0.0)) {
            throw Error(ErrorCode::DegenerateBounds, "log-scaled variable " + v.name + " needs a positive lower bound");
        }
    }
}

double SearchSpace::to_value(std::size_t j, double u) const {
    const auto& v = variables.at(j);
    u = std::clamp(u, 0.0, 1.0);
    if (v.log_scale) return v.lower * std::pow(v.upper / v.lower, u);
    return v.lower + u * (v.upper - v.lower);
}

double SearchSpace::to_unit(std::size_t j, double value) const {
    const auto& v = variables.at(j);
    const double u = v.log_scale ? std::log(value / v.lower) / std::log(v.upper / v.lower)
                                 : (value - v.lower) / (v.upper - v.lower);
    return std::clamp(u, 0.0, 1.0);
}

DesignPoint SearchSpace::point(const std::vector<double>& unit) const {
    DesignPoint p;
    p.frozen = frozen;
    p.topology_id = topology_id;
    for (std::size_t j = 0; j < variables.size(); ++j) {
        // The reference value is reproduced exactly when the optimizer proposes it.
        const double ref_u = to_unit(j, variables[j].reference);
        const double v = unit[j] == ref_u ? variables[j].reference : to_value(j, unit[j]);
        p.variables.emplace_back(variables[j].name, v);
    }
    return p;
}

std::vector<double> SearchSpace::reference_unit() const {
    std::vector<double> u(variables.size());
    for (std::size_t j = 0; j < variables.size(); ++j) u[j] = to_unit(j, variables[j].reference);
    return u;
}

SearchSpace SearchSpace::from_scope(const ScopedVariableSet& scope, std::string topology_id) {
    SearchSpace s;
    s.variables = scope.variables;
    s.frozen = scope.frozen;
    s.topology_id = std::move(topology_id);
    return s;
}

std::size_t RunRecord::evals_to_fraction(double fraction) const {
    if (history.empty()) return 0;
    const double final_best = history.back().best_fom;
    const double threshold = final_best - (1.0 - fraction) * std::fabs(final_best);
    for (const auto& h : history) {
        if (h.best_fom >= threshold) return h.eval;
    }
    return history.back().eval;
}

namespace {

// Records every evaluation and keeps the incumbent.
class Recorder {
public:
    Recorder(RunRecord& record, const SearchSpace& space, Evaluator& evaluator, const RunOptions& options)
        : record_(record), space_(space), evaluator_(evaluator), options_(options) {}

    double evaluate(const std::vector<double>& unit) {
        if (record_.history.size() >= options_.budget) throw Error(ErrorCode::InvariantViolation, "budget exceeded");
        HistoryEntry h;
        h.eval = record_.history.size() + 1;
        h.point = space_.point(unit);
        h.metrics = evaluator_.run(h.point);
        h.fom = evaluator_.fom(h.metrics);
        if (!std::isfinite(h.fom)) h.fom = -1e300;
        if (record_.history.empty() || h.fom > record_.best().fom) record_.best_index = record_.history.size();
        h.best_fom = record_.history.empty() ? h.fom : std::max(h.fom, record_.history.back().best_fom);
        if (options_.retention) h.pckri = options_.retention(h.point);
        record_.history.push_back(std::move(h));
        return record_.history.back().fom;
    }

    std::size_t remaining() const { return options_.budget - record_.history.size(); }

private:
    RunRecord& record_;
    const SearchSpace& space_;
    Evaluator& evaluator_;
    const RunOptions& options_;
};

RunRecord start_record(const std::string& name, const SearchSpace& space, const RunOptions& options) {
    RunRecord r;
    r.optimizer = name;
    r.seed = options.seed;
    r.budget = options.budget;
    r.space = space;
    return r;
}

double radical_inverse(std::size_t index, std::size_t base) {
    double result = 0.0;
    double f = 1.0 / static_cast<double>(base);
    while (index > 0) {
        result += f * static_cast<double>(index % base);
        index /= base;
        f /= static_cast<double>(base);
    }
    return result;
}

std::vector<std::size_t> first_primes(std::size_t count) {
    std::vector<std::size_t> primes;
    for (std::size_t n = 2; primes.size() < count; ++n) {
        if (std::all_of(primes.begin(), primes.end(), [n](std::size_t p) { return n % p != 0; })) primes.push_back(n);
    }
    return primes;
}

// Randomly shifted Halton points.
std::vector<std::vector<double>> halton(std::size_t count, std::size_t dim, std::mt19937_64& rng) {
    const auto primes = first_primes(dim);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::vector<double> shift(dim);
    for (auto& s : shift) s = unif(rng);
    std::vector<std::vector<double>> pts(count, std::vector<double>(dim));
    for (std::size_t i = 0; i < count; ++i) {
        for (std::size_t j = 0; j < dim; ++j) {
            double u = radical_inverse(i + 1, primes[j]) + shift[j];
            pts[i][j] = u - std::floor(u);
        }
    }
    return pts;
}

}  // namespace

Eigen::MatrixXd GaussianProcess::kernel(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, double ell) const {
    const Eigen::VectorXd an = a.rowwise().squaredNorm();
    const Eigen::VectorXd bn = b.rowwise().squaredNorm();
    Eigen::MatrixXd d2 = (-2.0 * a * b.transpose()).colwise() + an;
    d2.rowwise() += bn.transpose();
    const double s5 = std::sqrt(5.0);
    return d2.unaryExpr([&](double v) {
        const double r = std::sqrt(std::max(v, 0.0)) / ell;
        return (1.0 + s5 * r + 5.0 * r * r / 3.0) * std::exp(-s5 * r);
    });
}

void GaussianProcess::fit(const std::vector<std::vector<double>>& x, const std::vector<double>& y) {
    const auto n = static_cast<Eigen::Index>(x.size());
    if (n == 0) throw Error(ErrorCode::InvalidConfig, "GP fit needs at least one point");
    const auto d = static_cast<Eigen::Index>(x.front().size());
    x_.resize(n, d);
    Eigen::VectorXd yv(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < d; ++j) x_(i, j) = x[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
        yv(i) = y[static_cast<std::size_t>(i)];
    }
    y_mean_ = yv.mean();
    const double var = (yv.array() - y_mean_).square().sum() / static_cast<double>(n);
    y_scale_ = var > 1e-24 ? std::sqrt(var) : 1.0;
    const Eigen::VectorXd ys = (yv.array() - y_mean_) / y_scale_;

    const double root_d = std::sqrt(static_cast<double>(d));
    double best_lml = -std::numeric_limits<double>::infinity();
    for (double g : {0.05, 0.1, 0.2, 0.35, 0.6, 1.0}) {
        const double ell = g * root_d;
        Eigen::MatrixXd k = kernel(x_, x_, ell);
        k.diagonal().array() += 1e-6;
        Eigen::LLT<Eigen::MatrixXd> llt(k);
        if (llt.info() != Eigen::Success) continue;
        const Eigen::VectorXd alpha = llt.solve(ys);
        const double quad = std::max(ys.dot(alpha), 1e-12);
        const double signal = quad / static_cast<double>(n);
        const double logdet = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
        const double lml = -0.5 * static_cast<double>(n) * std::log(signal) - 0.5 * logdet;
        if (lml > best_lml) {
            best_lml = lml;
            lengthscale_ = ell;
            signal_ = signal;
            llt_ = llt;
            alpha_ = alpha;
        }
    }
    if (!std::isfinite(best_lml)) throw Error(ErrorCode::InvariantViolation, "GP kernel matrix not positive definite");
}

void GaussianProcess::predict(const Eigen::MatrixXd& x, Eigen::VectorXd& mean, Eigen::VectorXd& sd) const {
    const Eigen::MatrixXd ks = kernel(x_, x, lengthscale_);  // n x m
    mean = (ks.transpose() * alpha_).array() * y_scale_ + y_mean_;
    const Eigen::MatrixXd v = llt_.matrixL().solve(ks);
    const Eigen::VectorXd var = (1.0 - v.colwise().squaredNorm().array()).max(0.0).matrix();
    sd = (var.array() * signal_).sqrt() * y_scale_;
}

std::pair<double, double> GaussianProcess::predict(const std::vector<double>& x) const {
    Eigen::MatrixXd m(1, static_cast<Eigen::Index>(x.size()));
    for (std::size_t j = 0; j < x.size(); ++j) m(0, static_cast<Eigen::Index>(j)) = x[j];
    Eigen::VectorXd mean, sd;
    predict(m, mean, sd);
    return {mean(0), sd(0)};
}

RunRecord ucb_bo(const SearchSpace& space, Evaluator& evaluator, const RunOptions& options, const BoConfig& cfg) {
    space.validate();
    if (options.budget < cfg.initial || cfg.initial == 0) {
        throw Error(ErrorCode::BudgetTooSmall, "budget " + std::to_string(options.budget) +
                                                   " is below the initial design size " + std::to_string(cfg.initial));
    }
    RunRecord record = start_record("bo", space, options);
    record.config = {{"initial", cfg.initial}, {"kappa", cfg.kappa}, {"random_candidates", cfg.random_candidates},
                     {"include_reference", cfg.include_reference}};
    Recorder rec(record, space, evaluator, options);
    std::mt19937_64 rng(options.seed);
    const std::size_t d = space.dimension();

    std::vector<std::vector<double>> xs;
    std::vector<double> ys;
    auto sample = [&](const std::vector<double>& u) {
        xs.push_back(u);
        ys.push_back(rec.evaluate(u));
    };
    std::size_t initial = cfg.initial;
    if (cfg.include_reference) {
        sample(space.reference_unit());
        --initial;
    }
    for (const auto& u : halton(initial, d, rng)) sample(u);

    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::normal_distribution<double> gauss(0.0, 1.0);
    GaussianProcess gp;
    while (rec.remaining() > 0) {
        gp.fit(xs, ys);

        // Candidate pool: uniform points plus perturbations of the best observations.
        std::vector<std::vector<double>> pool;
        for (std::size_t i = 0; i < cfg.random_candidates; ++i) {
            std::vector<double> u(d);
            for (auto& v : u) v = unif(rng);
            pool.push_back(std::move(u));
        }
        std::vector<std::size_t> order(ys.size());
        std::iota(order.begin(), order.end(), 0);
        const std::size_t elite = std::min<std::size_t>(5, order.size());
        std::partial_sort(order.begin(), order.begin() + static_cast<long>(elite), order.end(),
                          [&](std::size_t a, std::size_t b) { return ys[a] > ys[b]; });
        for (std::size_t e = 0; e < elite; ++e) {
            for (double step : {0.02, 0.05, 0.15}) {
                for (int k = 0; k < 8; ++k) {
                    std::vector<double> u = xs[order[e]];
                    for (auto& v : u) v = std::clamp(v + step * gauss(rng), 0.0, 1.0);
                    pool.push_back(std::move(u));
                }
            }
        }
        auto score = [&](const std::vector<std::vector<double>>& pts) {
            Eigen::MatrixXd m(static_cast<Eigen::Index>(pts.size()), static_cast<Eigen::Index>(d));
            for (std::size_t i = 0; i < pts.size(); ++i) {
                for (std::size_t j = 0; j < d; ++j) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = pts[i][j];
            }
            Eigen::VectorXd mean, sd;
            gp.predict(m, mean, sd);
            return Eigen::VectorXd(mean + cfg.kappa * sd);
        };
        Eigen::VectorXd acq = score(pool);
        Eigen::Index best_i = 0;
        acq.maxCoeff(&best_i);
        std::vector<double> best = pool[static_cast<std::size_t>(best_i)];
        double best_acq = acq(best_i);

        // Local refinement around the acquisition maximizer.
        for (double step : {0.05, 0.02, 0.005}) {
            std::vector<std::vector<double>> local;
            for (int k = 0; k < 12; ++k) {
                std::vector<double> u = best;
                for (auto& v : u) v = std::clamp(v + step * gauss(rng), 0.0, 1.0);
                local.push_back(std::move(u));
            }
            Eigen::VectorXd la = score(local);
            Eigen::Index li = 0;
            if (la.maxCoeff(&li) > best_acq) {
                best_acq = la(li);
                best = local[static_cast<std::size_t>(li)];
            }
        }
        sample(best);
    }
    return record;
}

RunRecord differential_evolution(const SearchSpace& space, Evaluator& evaluator, const RunOptions& options,
                                 const DeConfig& cfg) {
    space.validate();
    const std::size_t d = space.dimension();
    std::size_t pop = cfg.population;
    if (pop == 0) pop = std::min(std::max<std::size_t>(8, 2 * d), options.budget);
    if (cfg.population != 0 && pop < 4) throw Error(ErrorCode::InvalidConfig, "DE population must be at least 4");
    if (options.budget < std::max<std::size_t>(pop, 4)) {
        throw Error(ErrorCode::BudgetTooSmall, "budget " + std::to_string(options.budget) + " is below the population " +
                                                   std::to_string(pop));
    }
    if (!(cfg.F > 0.0 && cfg.F <= 2.0) || !(cfg.CR >= 0.0 && cfg.CR <= 1.0)) {
        throw Error(ErrorCode::InvalidConfig, "DE needs F in (0,2] and CR in [0,1]");
    }
    if (cfg.strategy != "rand1" && cfg.strategy != "best1" && cfg.strategy != "current_to_best1") {
        throw Error(ErrorCode::InvalidConfig, "DE strategy must be 'rand1', 'best1' or 'current_to_best1'");
    }
    RunRecord record = start_record("de", space, options);
    record.config = {{"population", pop}, {"F", cfg.F}, {"CR", cfg.CR}, {"strategy", cfg.strategy},
                     {"include_reference", cfg.include_reference}};
    Recorder rec(record, space, evaluator, options);
    std::mt19937_64 rng(options.seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);

    std::vector<std::vector<double>> members;
    std::vector<double> fitness;
    if (cfg.include_reference) members.push_back(space.reference_unit());
    while (members.size() < pop) {
        std::vector<double> u(d);
        for (auto& v : u) v = unif(rng);
        members.push_back(std::move(u));
    }
    for (const auto& m : members) fitness.push_back(rec.evaluate(m));

    std::uniform_int_distribution<std::size_t> pick(0, pop - 1);
    std::uniform_int_distribution<std::size_t> pick_dim(0, d - 1);
    while (rec.remaining() > 0) {
        for (std::size_t i = 0; i < pop && rec.remaining() > 0; ++i) {
            std::size_t r1, r2, r3;
            do r1 = pick(rng); while (r1 == i);
            do r2 = pick(rng); while (r2 == i || r2 == r1);
            do r3 = pick(rng); while (r3 == i || r3 == r1 || r3 == r2);
            const std::size_t jrand = pick_dim(rng);
            const auto best = static_cast<std::size_t>(std::max_element(fitness.begin(), fitness.end()) - fitness.begin());
            std::vector<double> trial = members[i];
            for (std::size_t j = 0; j < d; ++j) {
                if (j == jrand || unif(rng) < cfg.CR) {
                    const double diff = cfg.F * (members[r2][j] - members[r3][j]);
                    double v = members[r1][j] + diff;
                    if (cfg.strategy == "best1") v = members[best][j] + diff;
                    if (cfg.strategy == "current_to_best1") {
                        v = members[i][j] + cfg.F * (members[best][j] - members[i][j]) + diff;
                    }
                    trial[j] = std::clamp(v, 0.0, 1.0);
                }
            }
            const double f = rec.evaluate(trial);
            if (f >= fitness[i]) {
                members[i] = std::move(trial);
                fitness[i] = f;
            }
        }
    }
    return record;
}

RunRecord optimize(const SearchSpace& space, Evaluator& evaluator, const RunOptions& options,
                   const OptimizerChoice& choice) {
    if (choice.kind == "bo") return ucb_bo(space, evaluator, options, choice.bo);
    if (choice.kind == "de") return differential_evolution(space, evaluator, options, choice.de);
    throw Error(ErrorCode::InvalidConfig, "optimizer kind must be 'bo' or 'de', got '" + choice.kind + "'");
}

OptimizerChoice optimizer_from_json(const nlohmann::json& document) {
    OptimizerChoice c;
    try {
        c.kind = document.value("kind", std::string("bo"));
        const auto params = document.value("params", nlohmann::json::object());
        for (const auto& [key, value] : params.items()) {
            if (c.kind == "bo" && key == "initial") c.bo.initial = value.get<std::size_t>();
            else if (c.kind == "bo" && key == "kappa") c.bo.kappa = value.get<double>();
            else if (c.kind == "bo" && key == "random_candidates") c.bo.random_candidates = value.get<std::size_t>();
            else if (c.kind == "bo" && key == "include_reference") c.bo.include_reference = value.get<bool>();
            else if (c.kind == "de" && key == "population") c.de.population = value.get<std::size_t>();
            else if (c.kind == "de" && key == "F") c.de.F = value.get<double>();
            else if (c.kind == "de" && key == "CR") c.de.CR = value.get<double>();
            else if (c.kind == "de" && key == "strategy") c.de.strategy = value.get<std::string>();
            else if (c.kind == "de" && key == "include_reference") c.de.include_reference = value.get<bool>();
            else throw Error(ErrorCode::InvalidConfig, "unknown " + c.kind + " parameter '" + key + "'");
        }
    } catch (const nlohmann::json::exception& ex) {
        throw Error(ErrorCode::InvalidConfig, std::string("optimizer config: ") + ex.what());
    }
    if (c.kind != "bo" && c.kind != "de") throw Error(ErrorCode::InvalidConfig, "optimizer kind must be 'bo' or 'de'");
    return c;
}

nlohmann::json to_json(const RunRecord& record) {
    nlohmann::json vars = nlohmann::json::array();
    for (const auto& v : record.space.variables) {
        vars.push_back({{"name", v.name}, {"reference", v.reference}, {"lower", v.lower}, {"upper", v.upper},
                        {"log_scale", v.log_scale}});
    }
    nlohmann::json history = nlohmann::json::array();
    for (const auto& h : record.history) {
        nlohmann::json values = nlohmann::json::object();
        for (const auto& [n, v] : h.point.variables) values[n] = v;
        history.push_back({{"eval", h.eval},
                           {"topology_id", h.point.topology_id},
                           {"values", values},
                           {"metrics", h.metrics},
                           {"fom", h.fom},
                           {"best_fom", h.best_fom},
                           {"pckri", h.pckri ? nlohmann::json(*h.pckri) : nlohmann::json(nullptr)}});
    }
    nlohmann::json best = nullptr;
    if (!record.history.empty()) {
        const auto& b = record.best();
        nlohmann::json values = nlohmann::json::object();
        for (const auto& [n, v] : b.point.variables) values[n] = v;
        best = {{"eval", b.eval}, {"fom", b.fom}, {"values", values},
                {"pckri", b.pckri ? nlohmann::json(*b.pckri) : nlohmann::json(nullptr)}};
    }
    return {{"optimizer", record.optimizer},
            {"seed", record.seed},
            {"budget", record.budget},
            {"config", record.config},
            {"topology_id", record.space.topology_id},
            {"variables", vars},
            {"frozen", record.space.frozen},
            {"history", history},
            {"best", best},
            {"evals_to_95", record.evals_to_fraction(0.95)},
            {"trace", record.trace.is_null() ? nlohmann::json(nullptr) : record.trace},
            {"extra", record.extra}};
}

}  // namespace heart
