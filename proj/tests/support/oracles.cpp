// SPDX-License-Identifier: Apache-2.0
#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <numeric>

namespace heart::testing {

namespace {

std::pair<std::string, std::string> conduction_pair(const Device& d) {
    switch (d.kind) {
        case DeviceKind::MosN:
        case DeviceKind::MosP:
            return {lower(d.net("D")), lower(d.net("S"))};
        case DeviceKind::Capacitor:
            return {};
        default:
            return {lower(d.net("T1")), lower(d.net("T2"))};
    }
}

}  // namespace

std::set<std::string> dc_path_oracle(const CircuitNetlist& netlist, const RailConfig& rails) {
    const RailConfig eff = effective_rails(netlist, rails);
    struct Branch {
        std::string name, a, b;
    };
    std::vector<Branch> branches;
    for (const auto& d : netlist.devices) {
        auto [a, b] = conduction_pair(d);
        if (!a.empty() && a != b) branches.push_back({d.name, a, b});
    }
    const std::size_t n = branches.size();
    std::set<std::string> alive;
    // Explicit stack of (current net, nets on path, branch bitmask).
    struct State {
        std::string net;
        std::set<std::string> nets;
        std::vector<bool> used;
    };
    std::vector<State> stack;
    std::set<std::string> highs;
    for (const auto& d : netlist.devices) {
        for (const auto& t : d.terminals) {
            if (eff.is_high(t.net)) highs.insert(lower(t.net));
        }
    }
    for (const auto& h : highs) stack.push_back({h, {h}, std::vector<bool>(n, false)});
    while (!stack.empty()) {
        State s = std::move(stack.back());
        stack.pop_back();
        for (std::size_t i = 0; i < n; ++i) {
            if (s.used[i]) continue;
            const auto& br = branches[i];
            std::string next;
            if (br.a == s.net) next = br.b;
            else if (br.b == s.net) next = br.a;
            else continue;
            if (s.nets.count(next)) continue;
            if (eff.is_low(next)) {
                for (std::size_t j = 0; j < n; ++j) {
                    if (s.used[j]) alive.insert(branches[j].name);
                }
                alive.insert(br.name);
                continue;
            }
            if (eff.is_supply(next)) continue;
            State t = s;
            t.net = next;
            t.nets.insert(next);
            t.used[i] = true;
            stack.push_back(std::move(t));
        }
    }
    return alive;
}

namespace {

std::multiset<std::pair<std::string, std::string>> labels(const Device& d) {
    const bool sym = d.kind == DeviceKind::Resistor || d.kind == DeviceKind::Capacitor || d.kind == DeviceKind::Inductor;
    std::multiset<std::pair<std::string, std::string>> out;
    for (const auto& t : d.terminals) out.emplace(sym ? "*" : t.label, lower(t.net));
    return out;
}

std::size_t mismatch(const Device& a, const Device& b) {
    auto la = labels(a);
    auto lb = labels(b);
    std::size_t common = 0;
    for (const auto& e : la) {
        auto it = lb.find(e);
        if (it != lb.end()) {
            lb.erase(it);
            ++common;
        }
    }
    return a.terminals.size() + b.terminals.size() - 2 * common;
}

}  // namespace

std::size_t edit_distance_oracle(const CircuitNetlist& ref, const CircuitNetlist& candidate) {
    const auto& A = ref.devices;
    const auto& B = candidate.devices;
    std::vector<bool> taken(B.size(), false);
    std::size_t best = std::numeric_limits<std::size_t>::max();
    std::function<void(std::size_t, std::size_t)> rec = [&](std::size_t i, std::size_t acc) {
        if (acc >= best) return;
        if (i == A.size()) {
            std::size_t total = acc;
            for (std::size_t j = 0; j < B.size(); ++j) {
                if (!taken[j]) total += B[j].terminals.size();
            }
            best = std::min(best, total);
            return;
        }
        rec(i + 1, acc + A[i].terminals.size());
        for (std::size_t j = 0; j < B.size(); ++j) {
            if (taken[j] || A[i].kind != B[j].kind) continue;
            taken[j] = true;
            rec(i + 1, acc + mismatch(A[i], B[j]));
            taken[j] = false;
        }
    };
    rec(0, 0);
    return best;
}

std::vector<std::string> feasible_oracle(const KnowledgeTable& table, const RetrievalQuery& query, int window) {
    std::vector<std::string> out;
    for (const auto& row : table.rows) {
        bool ok = true;
        for (const auto& c : query.constraints) {
            if (c.tone == Tone::Strict && c.prior_rank && std::abs(row.ranks.at(c.metric) - *c.prior_rank) > window) {
                ok = false;
            }
        }
        if (ok) out.push_back(row.topo_id);
    }
    return out;
}

std::string retrieval_argmin_oracle(const KnowledgeTable& table, const RetrievalQuery& query, int window) {
    const auto ids = feasible_oracle(table, query, window);
    std::string best;
    double best_score = 0.0;
    int best_sum = 0;
    for (const auto& id : ids) {
        const auto* row = table.find(id);
        double score = 0.0;
        for (const auto& o : query.objectives) score += o.weight * row->ranks.at(o.metric);
        int sum = 0;
        for (const auto& [m, r] : row->ranks) sum += r;
        if (best.empty()) {
            best = id;
            best_score = score;
            best_sum = sum;
            continue;
        }
        const bool tie = std::fabs(score - best_score) <= 1e-9 * std::max({1.0, std::fabs(score), std::fabs(best_score)});
        const bool better = tie ? (sum < best_sum || (sum == best_sum && id < best)) : score < best_score;
        if (better) {
            best = id;
            best_score = score;
            best_sum = sum;
        }
    }
    return best;
}

KnowledgeTable random_table(std::mt19937_64& rng, std::size_t max_rows, std::size_t max_metrics) {
    std::uniform_int_distribution<std::size_t> nrows(1, max_rows);
    std::uniform_int_distribution<std::size_t> nmetrics(1, max_metrics);
    const std::size_t rows = nrows(rng);
    const std::size_t metrics = nmetrics(rng);
    KnowledgeTable t;
    t.category = "random";
    for (std::size_t m = 0; m < metrics; ++m) t.metrics.push_back("m" + std::to_string(m));
    for (std::size_t r = 0; r < rows; ++r) {
        TopologyRecord rec;
        rec.topo_id = "t" + std::to_string(r);
        t.rows.push_back(rec);
    }
    for (const auto& m : t.metrics) {
        std::vector<int> perm(rows);
        std::iota(perm.begin(), perm.end(), 1);
        std::shuffle(perm.begin(), perm.end(), rng);
        for (std::size_t r = 0; r < rows; ++r) t.rows[r].ranks[m] = perm[r];
    }
    // Shuffle row order so ids do not follow storage order.
    std::shuffle(t.rows.begin(), t.rows.end(), rng);
    return t;
}

RetrievalQuery random_query(std::mt19937_64& rng, const KnowledgeTable& table) {
    std::vector<std::string> metrics = table.metrics;
    std::shuffle(metrics.begin(), metrics.end(), rng);
    std::uniform_int_distribution<std::size_t> nobj(1, metrics.size());
    const std::size_t k = nobj(rng);
    RetrievalQuery q;
    std::uniform_int_distribution<int> wpick(1, 4);
    std::bernoulli_distribution equal_weights(0.3);
    const bool equal = equal_weights(rng);
    for (std::size_t i = 0; i < k; ++i) q.objectives.push_back({metrics[i], equal ? 1.0 : static_cast<double>(wpick(rng))});
    std::uniform_int_distribution<int> tone(0, 2);
    std::uniform_int_distribution<std::size_t> row(0, table.rows.size() - 1);
    for (std::size_t i = k; i < metrics.size(); ++i) {
        Constraint c;
        c.metric = metrics[i];
        c.tone = static_cast<Tone>(tone(rng));
        if (c.tone != Tone::DontCare) c.prior_rank = table.rows[row(rng)].ranks.at(c.metric);
        q.constraints.push_back(c);
    }
    q.normalize();
    return q;
}

CircuitNetlist random_netlist(std::mt19937_64& rng, std::size_t devices, std::size_t nets) {
    std::vector<std::string> names{"vdd", "gnd"};
    for (std::size_t i = 0; i < nets; ++i) names.push_back("n" + std::to_string(i));
    std::uniform_int_distribution<std::size_t> pick(0, names.size() - 1);
    std::uniform_int_distribution<int> kind(0, 3);
    std::string text = ".title rnd\n";
    for (std::size_t i = 0; i < devices; ++i) {
        const int k = kind(rng);
        const std::string a = names[pick(rng)], b = names[pick(rng)], c = names[pick(rng)];
        if (k == 0) text += "M" + std::to_string(i) + " " + a + " " + b + " " + c + " gnd nmos W=1u L=1u\n";
        else if (k == 1) text += "M" + std::to_string(i) + " " + a + " " + b + " " + c + " vdd pmos W=1u L=1u\n";
        else if (k == 2) text += "R" + std::to_string(i) + " " + a + " " + b + " 1k\n";
        else text += "C" + std::to_string(i) + " " + a + " " + b + " 1p\n";
    }
    // Keeps both rails present whatever was drawn; no DC effect.
    text += "Cdec vdd gnd 1p\n.end\n";
    return parse_netlist(text);
}

}  // namespace heart::testing
