// SPDX-License-Identifier: Apache-2.0
#include "heart/annotator.hpp"
#include "heart/error.hpp"
#include "heart/topo_db.hpp"
#include "heart/traversal.hpp"
#include "heart/tree.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <sstream>

namespace heart {

namespace {

// Role -> metrics and behaviours the block influences. Descriptions carry
// these words so that query/role overlap can rank tree edges.
const std::map<std::string, std::string>& impact_table() {
    static const std::map<std::string, std::string> table{
        {"latched comparator", "offset, decision delay, input-referred noise, frequency error, resolution"},
        {"comparator latch", "regeneration, decision delay, metastability, frequency error"},
        {"comparator front-end", "offset, delay, input-referred noise, threshold accuracy, frequency error"},
        {"differential amplifier", "gain, offset, input-referred noise, bandwidth, cmrr, area"},
        {"differential pair", "offset, input-referred noise, gain, linearity"},
        {"inverting amplifier/logic", "logic delay, switching threshold, dynamic power"},
        {"current mirror", "bias current, output resistance, matching, power"},
        {"cascode stage", "gain, output resistance, headroom"},
        {"bias network", "bias current, power, iq, supply sensitivity, temperature drift"},
        {"capacitor DAC bank", "resolution, linearity, settling, area, kT/C noise"},
        {"resistor DAC ladder", "resolution, linearity, static power"},
        {"resistor divider", "reference voltage, threshold, static power, accuracy"},
        {"common-source gain stage", "gain, bandwidth, output swing, power"},
        {"source follower buffer", "output drive, output resistance, bandwidth, swing"},
        {"RC filter", "bandwidth, cutoff frequency, noise, area"},
        {"compensation capacitor", "phase margin, stability, bandwidth, area"},
        {"timing capacitor", "oscillation frequency, timing, area"},
        {"bias decoupling capacitor", "bias stability, supply rejection, area"},
        {"load capacitor", "bandwidth, settling, area"},
        {"charge/discharge switch", "oscillation frequency, timing, duty cycle"},
        {"ring oscillator core", "frequency, jitter, phase noise, power"},
        {"ring oscillator", "oscillation frequency, jitter, phase noise, power"},
        {"voltage source", "supply, reference"},
        {"current source", "bias current, power, iq"},
        {"generic subcircuit", "general behaviour"},
    };
    return table;
}

std::string impacts_of(const std::string& role) {
    auto it = impact_table().find(role);
    return it == impact_table().end() ? std::string() : it->second;
}

struct Mos {
    const Device* device;
    std::string d, g, s;
    bool p;
};

class FragmentView {
public:
    FragmentView(const FragmentInfo& fragment, const GlobalContext& global)
        : fragment_(fragment), netlist_(global.netlist) {
        for (const auto& dev : fragment.devices) {
            if (is_mos(dev.kind)) {
                mos_.push_back({&dev, dev.net("D"), dev.net("G"), dev.net("S"), dev.kind == DeviceKind::MosP});
            } else if (dev.kind == DeviceKind::Resistor) {
                resistors_.push_back(&dev);
            } else if (dev.kind == DeviceKind::Capacitor) {
                capacitors_.push_back(&dev);
            } else if (dev.kind == DeviceKind::Inductor) {
                inductors_.push_back(&dev);
            } else {
                sources_.push_back(&dev);
            }
        }
    }

    bool supply(const std::string& net) const {
        return netlist_ ? netlist_->role_of(net) == NetRole::SupplyPort : iequals(net, "vdd") || iequals(net, "gnd");
    }

    const std::vector<Mos>& mos() const { return mos_; }
    const std::vector<const Device*>& resistors() const { return resistors_; }
    const std::vector<const Device*>& capacitors() const { return capacitors_; }
    const std::vector<const Device*>& sources() const { return sources_; }
    std::size_t size() const { return fragment_.devices.size(); }

    bool has_cross_coupled() const {
        for (std::size_t i = 0; i < mos_.size(); ++i) {
            for (std::size_t j = i + 1; j < mos_.size(); ++j) {
                const auto& a = mos_[i];
                const auto& b = mos_[j];
                if (a.p == b.p && a.g == b.d && b.g == a.d && a.d != b.d) return true;
            }
        }
        return false;
    }

    bool has_diff_pair() const {
        for (std::size_t i = 0; i < mos_.size(); ++i) {
            for (std::size_t j = i + 1; j < mos_.size(); ++j) {
                const auto& a = mos_[i];
                const auto& b = mos_[j];
                if (a.p == b.p && a.s == b.s && !supply(a.s) && a.g != b.g && a.d != b.d && a.d != a.g &&
                    b.d != b.g && a.g != b.d && b.g != a.d) {
                    return true;
                }
            }
        }
        return false;
    }

    bool has_mirror() const {
        for (std::size_t i = 0; i < mos_.size(); ++i) {
            for (std::size_t j = 0; j < mos_.size(); ++j) {
                if (i == j) continue;
                const auto& a = mos_[i];
                const auto& b = mos_[j];
                if (a.p == b.p && a.g == b.g && a.s == b.s && a.d == a.g && b.d != b.g) return true;
            }
        }
        return false;
    }

    bool has_diode() const {
        return std::any_of(mos_.begin(), mos_.end(), [](const Mos& m) { return m.d == m.g; });
    }

    bool has_cascode() const {
        for (const auto& a : mos_) {
            for (const auto& b : mos_) {
                if (&a == &b || a.p != b.p || a.s != b.d || supply(a.s) || supply(a.d) || a.g == b.g || a.d == a.g) {
                    continue;
                }
                if (count_conduction_users(a.s) == 2) return true;
            }
        }
        return false;
    }

    std::size_t inverter_count() const {
        std::size_t count = 0;
        for (const auto& p : mos_) {
            if (!p.p || !supply(p.s)) continue;
            for (const auto& n : mos_) {
                if (!n.p && supply(n.s) && n.g == p.g && n.d == p.d && p.d != p.g) ++count;
            }
        }
        return count;
    }

    bool is_ring() const {
        // Odd chain of inverters closing on itself.
        std::map<std::string, std::string> next;  // input net -> output net
        for (const auto& p : mos_) {
            if (!p.p) continue;
            for (const auto& n : mos_) {
                if (!n.p && n.g == p.g && n.d == p.d && supply(p.s) && supply(n.s)) next[p.g] = p.d;
            }
        }
        if (next.size() < 3 || next.size() % 2 == 0 || next.size() * 2 != mos_.size()) return false;
        std::string net = next.begin()->first;
        for (std::size_t i = 0; i < next.size(); ++i) {
            auto it = next.find(net);
            if (it == next.end()) return false;
            net = it->second;
        }
        return net == next.begin()->first;
    }

    bool cap_bank() const {
        std::map<std::string, int> shared;
        for (const auto* c : capacitors_) {
            for (const auto& t : c->terminals) {
                if (!supply(t.net)) ++shared[t.net];
            }
        }
        return std::any_of(shared.begin(), shared.end(), [](const auto& kv) { return kv.second >= 3; });
    }

    // Whether some device outside the fragment senses `net` at a MOS gate
    // paired with the opposite polarity (an inverter input).
    bool drives_inverter(const std::string& net) const {
        if (!netlist_) return false;
        bool p = false;
        bool n = false;
        for (const auto& dev : netlist_->devices) {
            if (!is_mos(dev.kind) || dev.net("G") != net || in_fragment(dev.name)) continue;
            (dev.kind == DeviceKind::MosP ? p : n) = true;
        }
        return p && n;
    }

    bool gate_sensed_elsewhere(const std::string& net) const {
        if (!netlist_) return false;
        return std::any_of(netlist_->devices.begin(), netlist_->devices.end(), [&](const Device& dev) {
            return is_mos(dev.kind) && dev.net("G") == net && !in_fragment(dev.name);
        });
    }

    bool mos_drain_elsewhere(const std::string& net) const {
        if (!netlist_) return false;
        return std::any_of(netlist_->devices.begin(), netlist_->devices.end(), [&](const Device& dev) {
            return is_mos(dev.kind) && dev.net("D") == net && !in_fragment(dev.name);
        });
    }

    bool diode_elsewhere(const std::string& net) const {
        if (!netlist_) return false;
        return std::any_of(netlist_->devices.begin(), netlist_->devices.end(), [&](const Device& dev) {
            return is_mos(dev.kind) && dev.net("D") == net && dev.net("G") == net && !in_fragment(dev.name);
        });
    }

    bool cap_on_net_elsewhere(const std::string& net) const {
        if (!netlist_) return false;
        return std::any_of(netlist_->devices.begin(), netlist_->devices.end(), [&](const Device& dev) {
            return dev.kind == DeviceKind::Capacitor && !in_fragment(dev.name) &&
                   (dev.net("T1") == net || dev.net("T2") == net);
        });
    }

    // Diff-amp output: the drain of the non-diode side of the mirror load.
    std::vector<std::string> amp_outputs() const {
        std::vector<std::string> outs;
        for (const auto& m : mos_) {
            if (m.d == m.g || supply(m.d)) continue;
            const bool has_diode_partner = std::any_of(mos_.begin(), mos_.end(), [&](const Mos& o) {
                return &o != &m && o.p == m.p && o.g == m.g && o.d == o.g;
            });
            if (has_diode_partner) outs.push_back(m.d);
        }
        return outs;
    }

    bool in_fragment(const std::string& name) const {
        return std::any_of(fragment_.devices.begin(), fragment_.devices.end(),
                           [&](const Device& d) { return iequals(d.name, name); });
    }

private:
    std::size_t count_conduction_users(const std::string& net) const {
        std::size_t n = 0;
        for (const auto& m : mos_) {
            if (m.d == net) ++n;
            if (m.s == net) ++n;
        }
        for (const auto* r : resistors_) {
            for (const auto& t : r->terminals) n += t.net == net ? 1 : 0;
        }
        return n;
    }

    const FragmentInfo& fragment_;
    const CircuitNetlist* netlist_;
    std::vector<Mos> mos_;
    std::vector<const Device*> resistors_;
    std::vector<const Device*> capacitors_;
    std::vector<const Device*> inductors_;
    std::vector<const Device*> sources_;
};

struct LeafClassification {
    std::string role;
    std::vector<std::string> features;
};

LeafClassification classify_leaf(const FragmentView& v) {
    LeafClassification c;
    const bool cross = v.has_cross_coupled();
    const bool pair = v.has_diff_pair();
    const bool mirror = v.has_mirror();
    const bool diode = v.has_diode();
    const std::size_t inverters = v.inverter_count();
    if (cross) c.features.push_back("cross-coupled pair");
    if (pair) c.features.push_back("differential pair");
    if (mirror) c.features.push_back("current mirror");
    if (diode && !mirror) c.features.push_back("diode-connected device");
    if (v.has_cascode()) c.features.push_back("cascode");
    if (inverters) c.features.push_back(std::to_string(inverters) + " CMOS inverter(s)");

    const auto& mos = v.mos();
    if (!mos.empty()) {
        if (v.is_ring()) {
            c.role = "ring oscillator core";
        } else if (cross && pair) {
            c.role = "latched comparator";
        } else if (cross) {
            c.role = "comparator latch";
        } else if (pair && mirror) {
            const auto outs = v.amp_outputs();
            const bool to_logic =
                std::any_of(outs.begin(), outs.end(), [&](const std::string& n) { return v.drives_inverter(n); });
            c.role = to_logic ? "comparator front-end" : "differential amplifier";
        } else if (pair) {
            c.role = "differential pair";
        } else if (inverters > 0 && inverters * 2 == mos.size()) {
            c.role = "inverting amplifier/logic";
        } else if (diode && (mos.size() == 1 || !v.resistors().empty() || !v.sources().empty())) {
            c.role = "bias network";
        } else if (mirror) {
            c.role = "current mirror";
        } else if (v.has_cascode()) {
            c.role = "cascode stage";
        } else {
            // Single-transistor stages: follower when the drain sits on a rail.
            const Mos* follower = nullptr;
            const Mos* common_source = nullptr;
            for (const auto& m : mos) {
                if (v.supply(m.d) && !v.supply(m.s) && !v.supply(m.g)) follower = &m;
                if (v.supply(m.s) && !v.supply(m.d) && !v.supply(m.g) && m.d != m.g) {
                    if (!common_source || v.gate_sensed_elsewhere(common_source->g)) common_source = &m;
                }
            }
            if (follower) {
                c.role = "source follower buffer";
            } else if (common_source && !v.resistors().empty() && mos.size() == 1 &&
                       v.cap_on_net_elsewhere(common_source->d) && !v.mos_drain_elsewhere(common_source->d)) {
                c.role = "charge/discharge switch";
            } else if (common_source) {
                c.role = "common-source gain stage";
            } else {
                c.role = "generic subcircuit";
            }
        }
        return c;
    }
    const auto& rs = v.resistors();
    const auto& cs = v.capacitors();
    if (!rs.empty() && cs.empty() && v.sources().empty()) {
        c.role = rs.size() >= 4 ? "resistor DAC ladder" : "resistor divider";
    } else if (!rs.empty() && !cs.empty()) {
        c.role = "RC filter";
    } else if (!cs.empty() && rs.empty()) {
        if (v.cap_bank()) {
            c.role = "capacitor DAC bank";
        } else if (cs.size() == 1) {
            const Device* cap = cs.front();
            const std::string& a = cap->net("T1");
            const std::string& b = cap->net("T2");
            if (!v.supply(a) && !v.supply(b)) {
                c.role = "compensation capacitor";
            } else {
                const std::string& node = v.supply(a) ? b : a;
                if (v.diode_elsewhere(node)) c.role = "bias decoupling capacitor";
                else if (v.gate_sensed_elsewhere(node) && v.mos_drain_elsewhere(node)) c.role = "timing capacitor";
                else c.role = "load capacitor";
            }
        } else {
            c.role = "load capacitor";
        }
    } else if (!v.sources().empty()) {
        const bool current = std::any_of(v.sources().begin(), v.sources().end(),
                                         [](const Device* d) { return d->kind == DeviceKind::ISource; });
        c.role = current ? "current source" : "voltage source";
    } else {
        c.role = "generic subcircuit";
    }
    return c;
}

bool has_role(const std::vector<ChildSummary>& children, std::initializer_list<std::string_view> roles) {
    return std::any_of(children.begin(), children.end(), [&](const ChildSummary& c) {
        return std::any_of(roles.begin(), roles.end(), [&](std::string_view r) { return c.role.find(r) != std::string::npos; });
    });
}

// Odd chain of inverters where each output drives the next input and the last
// closes the cycle.
bool inverter_ring(const std::vector<ChildSummary>& children) {
    const std::size_t n = children.size();
    if (n < 3 || n % 2 == 0) return false;
    for (const auto& c : children) {
        if (c.role != "inverting amplifier/logic") return false;
    }
    std::vector<bool> seen(n, false);
    std::size_t at = 0;
    for (std::size_t step = 0; step < n; ++step) {
        seen[at] = true;
        std::size_t next = n;
        for (std::size_t b = 0; b < n; ++b) {
            if (b == at) continue;
            for (const auto& net : children[at].drain_nets) {
                if (children[b].gate_nets.count(net)) next = b;
            }
        }
        if (next == n) return false;
        if (step + 1 == n) return next == 0;
        if (seen[next]) return false;
        at = next;
    }
    return false;
}

std::string synthesize_parent_role(const std::vector<ChildSummary>& children) {
    if (inverter_ring(children)) return "ring oscillator";
    const bool comparator = has_role(children, {"comparator"});
    const bool cap_dac = has_role(children, {"capacitor DAC bank"});
    const bool logic = has_role(children, {"inverting amplifier/logic"});
    const bool timing = has_role(children, {"timing capacitor", "charge/discharge switch"});
    const bool bias = has_role(children, {"bias network", "current mirror", "current source"});
    const bool gain = has_role(children, {"differential amplifier", "differential pair", "common-source gain stage",
                                          "cascode stage"});
    const bool buffer = has_role(children, {"source follower buffer"});
    if (children.size() >= 2 && std::all_of(children.begin(), children.end(), [&](const ChildSummary& c) {
            return c.role == children.front().role && c.role.find("amplifier") != std::string::npos;
        })) {
        return "multi-channel amplifier";
    }
    if (comparator && cap_dac && logic) return "successive approximation ADC";
    if (comparator && timing) return "relaxation oscillator";
    if (has_role(children, {"ring oscillator core"})) return "ring oscillator";
    const bool differential = has_role(children, {"differential amplifier", "differential pair"});
    if (differential && has_role(children, {"common-source gain stage"})) {
        return buffer ? "buffered two-stage amplifier" : "two-stage amplifier";
    }
    if (bias && gain && buffer) return "signal chain";
    if (comparator) return "comparator";
    if (has_role(children, {"differential amplifier"}) && !has_role(children, {"common-source gain stage", "cascode stage"})) {
        return "operational transconductance amplifier";
    }
    if (children.size() == 2 && has_role(children, {"bias network"})) {
        // Bias branch plus one stage gated only from it.
        const auto& b = has_role({children[0]}, {"bias network"}) ? children[0] : children[1];
        const auto& o = &b == &children[0] ? children[1] : children[0];
        const bool mirrored = !o.gate_nets.empty() && std::all_of(o.gate_nets.begin(), o.gate_nets.end(), [&](const std::string& n) {
            return b.drain_nets.count(n) > 0;
        });
        if (mirrored) return "current mirror";
    }
    const bool only_logic = std::all_of(children.begin(), children.end(), [](const ChildSummary& c) {
        return c.role == "inverting amplifier/logic" || c.role.find("capacitor") != std::string::npos;
    });
    if (only_logic && logic) return "inverter";
    if (gain && bias) return "biased amplifier";
    if (gain) return "amplifier";
    return "composite circuit";
}

std::string join(const std::vector<std::string>& items, const std::string& sep) {
    std::string out;
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (i) out += sep;
        out += items[i];
    }
    return out;
}

std::string ports_text(const PortSets& ports) {
    std::vector<std::string> sig(ports.signal.begin(), ports.signal.end());
    std::vector<std::string> sup(ports.supply.begin(), ports.supply.end());
    return "signal ports {" + join(sig, ", ") + "}, supply ports {" + join(sup, ", ") + "}";
}

const std::map<std::string, std::vector<std::string>>& synonym_table() {
    static const std::map<std::string, std::vector<std::string>> table{
        {"noise", {"snr"}},         {"snr", {"noise"}},          {"speed", {"bandwidth", "delay"}},
        {"bandwidth", {"speed"}},   {"power", {"iq", "current"}}, {"iq", {"power", "current"}},
        {"delay", {"speed"}},       {"stability", {"phase"}},    {"jitter", {"noise"}},
    };
    return table;
}

std::string stem(std::string token) {
    if (token.size() > 3 && token.back() == 's' && token[token.size() - 2] != 's') token.pop_back();
    return token;
}

}  // namespace

std::vector<std::string> keyword_tokens(std::string_view text) {
    static const std::set<std::string> stop{
        "a",        "an",      "the",      "and",     "or",       "of",      "to",        "in",      "on",
        "for",      "with",    "by",       "is",      "are",      "be",      "at",        "from",    "while",
        "keep",     "keeping", "reduce",   "reduced", "reducing", "lower",   "lowering",  "increase",
        "increased", "improve", "improved", "minimize", "maximize", "higher", "better",   "decrease",
        "boost",    "raise",   "make",     "its",     "it",       "this",    "that",      "all",     "other",
        "same",     "the",     "approximately", "unchanged", "remaining", "by", "percent", "via",   "into",
        "we",       "need",    "needs",    "should",  "want",     "please",  "much",      "more",    "less",
    };
    std::vector<std::string> tokens;
    std::string current;
    auto flush = [&] {
        if (!current.empty() && !stop.count(current) && !std::all_of(current.begin(), current.end(), ::isdigit)) {
            tokens.push_back(current);
        }
        current.clear();
    };
    for (unsigned char ch : text) {
        if (std::isalnum(ch)) current.push_back(static_cast<char>(std::tolower(ch)));
        else flush();
    }
    flush();
    return tokens;
}

GlobalContext make_global_context(const CircuitNetlist& netlist) {
    std::map<std::string, int> kinds;
    for (const auto& d : netlist.devices) ++kinds[std::string(to_string(d.kind))];
    std::ostringstream digest;
    digest << netlist.name << ": " << netlist.devices.size() << " devices (";
    bool first = true;
    for (const auto& [kind, count] : kinds) {
        digest << (first ? "" : ", ") << count << " " << kind;
        first = false;
    }
    digest << "); supply {";
    first = true;
    for (const auto& n : netlist.nets) {
        if (n.role != NetRole::SupplyPort) continue;
        digest << (first ? "" : ", ") << n.name;
        first = false;
    }
    digest << "}; signal ports {";
    first = true;
    for (const auto& n : netlist.nets) {
        if (n.role != NetRole::SignalPort) continue;
        digest << (first ? "" : ", ") << n.name;
        first = false;
    }
    digest << "}";
    return {&netlist, digest.str()};
}

RoleAnnotation RuleAnnotator::classify_role(const FragmentInfo& fragment, const GlobalContext& global) const {
    if (fragment.devices.empty()) throw Error(ErrorCode::AnnotatorFailure, "empty fragment " + fragment.node_id);
    RoleAnnotation out;
    if (fragment.children.empty()) {
        const FragmentView view(fragment, global);
        const auto leaf = classify_leaf(view);
        out.role = leaf.role;
        std::vector<std::string> names;
        for (const auto& d : fragment.devices) names.push_back(d.name);
        std::ostringstream desc;
        desc << leaf.role << " formed by " << join(names, ", ");
        if (!leaf.features.empty()) desc << "; structure: " << join(leaf.features, ", ");
        desc << "; " << ports_text(fragment.ports);
        if (auto impacts = impacts_of(leaf.role); !impacts.empty()) desc << "; influences " << impacts;
        out.description = desc.str();
        return out;
    }
    out.role = synthesize_parent_role(fragment.children);
    std::vector<std::string> parts;
    std::set<std::string> impacts;
    std::vector<std::string> impact_order;
    for (const auto& child : fragment.children) {
        parts.push_back(child.role + " (" + child.id + ")");
    }
    std::vector<std::string> sources{out.role};
    for (const auto& child : fragment.children) sources.push_back(child.role);
    for (const auto& role : sources) {
        std::string list = impacts_of(role);
        std::stringstream in(list);
        std::string item;
        while (std::getline(in, item, ',')) {
            item.erase(0, item.find_first_not_of(' '));
            if (!item.empty() && impacts.insert(item).second) impact_order.push_back(item);
        }
    }
    std::ostringstream desc;
    desc << out.role << " composed of " << join(parts, ", ") << "; " << ports_text(fragment.ports);
    if (!impact_order.empty()) desc << "; influences " << join(impact_order, ", ");
    out.description = desc.str();
    return out;
}

std::vector<LoopAnnotation> RuleAnnotator::detect_loops(const std::vector<ChildSummary>& children,
                                                        const GlobalContext&) const {
    const std::size_t n = children.size();
    std::vector<std::vector<bool>> edge(n, std::vector<bool>(n, false));
    for (std::size_t a = 0; a < n; ++a) {
        for (std::size_t b = 0; b < n; ++b) {
            if (a == b) continue;
            for (const auto& net : children[a].drain_nets) {
                if (children[b].gate_nets.count(net)) {
                    edge[a][b] = true;
                    break;
                }
            }
        }
    }
    // Simple cycles, each reported once starting from its smallest index.
    std::vector<LoopAnnotation> loops;
    std::vector<std::size_t> path;
    std::vector<bool> on_path(n, false);
    auto dfs = [&](auto&& self, std::size_t start, std::size_t v) -> void {
        for (std::size_t w = start; w < n; ++w) {
            if (!edge[v][w]) continue;
            if (w == start && path.size() >= 2) {
                LoopAnnotation loop;
                std::vector<std::string> roles;
                for (std::size_t i : path) {
                    loop.members.push_back(children[i].id);
                    roles.push_back(children[i].role);
                }
                const bool regenerative =
                    std::any_of(roles.begin(), roles.end(), [](const std::string& r) { return r.find("latch") != std::string::npos; });
                const bool oscillating = std::any_of(roles.begin(), roles.end(), [](const std::string& r) {
                    return r.find("timing") != std::string::npos || r.find("charge") != std::string::npos;
                }) || (path.size() == n && inverter_ring(children));
                const std::string kind = oscillating ? "oscillation" : regenerative ? "regenerative" : "signal";
                loop.polarity_hint = kind + " feedback loop: " + join(roles, " -> ");
                loops.push_back(std::move(loop));
            } else if (w > start && !on_path[w]) {
                on_path[w] = true;
                path.push_back(w);
                self(self, start, w);
                path.pop_back();
                on_path[w] = false;
            }
        }
    };
    for (std::size_t s = 0; s < n; ++s) {
        path = {s};
        on_path.assign(n, false);
        on_path[s] = true;
        dfs(dfs, s, s);
    }
    return loops;
}

EdgeWeights RuleAnnotator::weigh_edges(std::string_view query, const ReasoningTree& tree) const {
    std::vector<std::string> terms;
    for (auto& t : keyword_tokens(query)) {
        t = stem(t);
        if (std::find(terms.begin(), terms.end(), t) == terms.end()) terms.push_back(t);
    }
    EdgeWeights weights;
    for (const auto& node : tree.nodes) {
        for (const auto& child_id : node.children) {
            const TreeNode& child = tree.node(child_id);
            std::set<std::string> text;
            for (auto& t : keyword_tokens(child.role + " " + child.description)) text.insert(stem(t));
            std::vector<std::string> matched;
            for (const auto& term : terms) {
                bool hit = text.count(term) > 0;
                if (!hit) {
                    if (auto syn = synonym_table().find(term); syn != synonym_table().end()) {
                        hit = std::any_of(syn->second.begin(), syn->second.end(),
                                          [&](const std::string& s) { return text.count(s) > 0; });
                    }
                }
                if (hit) matched.push_back(term);
            }
            const TreeEdge edge{node.id, child_id};
            const double w = terms.empty() ? 0.0 : static_cast<double>(matched.size()) / static_cast<double>(terms.size());
            weights.weights[edge] = w;
            weights.rationales[edge] = matched.empty()
                                           ? "no query term matches '" + child.role + "'"
                                           : "'" + child.role + "' matches " + join(matched, ", ");
        }
    }
    return weights;
}

RetrievalQuery RuleAnnotator::parse_query(std::string_view query, const std::vector<std::string>& metrics) const {
    return keyword_parse_query(std::string(query), metrics);
}

nlohmann::json to_json(const ChildSummary& child) {
    return {{"id", child.id},           {"role", child.role},           {"summary", child.summary},
            {"devices", child.devices}, {"drain_nets", child.drain_nets}, {"gate_nets", child.gate_nets}};
}

nlohmann::json to_json(const FragmentInfo& fragment) {
    nlohmann::json devices = nlohmann::json::array();
    for (const auto& d : fragment.devices) {
        nlohmann::json terms = nlohmann::json::object();
        for (const auto& t : d.terminals) terms[t.label] = t.net;
        devices.push_back({{"name", d.name}, {"kind", to_string(d.kind)}, {"terminals", terms}, {"params", d.params}});
    }
    nlohmann::json children = nlohmann::json::array();
    for (const auto& c : fragment.children) children.push_back(to_json(c));
    return {{"node_id", fragment.node_id},
            {"devices", devices},
            {"ports", {{"signal", fragment.ports.signal}, {"supply", fragment.ports.supply}}},
            {"role_hint", fragment.role_hint},
            {"children", children}};
}

}  // namespace heart
