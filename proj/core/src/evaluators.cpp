// SPDX-License-Identifier: Apache-2.0
#include "heart/evaluators.hpp"

#include "heart/error.hpp"
#include "heart/retention.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>

namespace heart {

CircuitNetlist apply_values(const CircuitNetlist& netlist, const std::map<std::string, double>& values) {
    CircuitNetlist out = netlist;
    for (const auto& [name, value] : values) {
        const auto dot = name.rfind('.');
        if (dot == std::string::npos) throw Error(ErrorCode::InvalidConfig, "variable '" + name + "' is not device.param");
        const std::string device = name.substr(0, dot);
        std::string param = name.substr(dot + 1);
        std::transform(param.begin(), param.end(), param.begin(), [](unsigned char c) { return std::toupper(c); });
        auto it = std::find_if(out.devices.begin(), out.devices.end(), [&](const Device& d) { return iequals(d.name, device); });
        if (it == out.devices.end()) throw Error(ErrorCode::InvalidConfig, "variable '" + name + "' names no device");
        it->params[param] = value;
    }
    return out;
}

double spec_margin(double value, const MetricSpec& spec) {
    const double margin = spec.lower_is_better ? (spec.target - value) / spec.target : (value - spec.target) / spec.target;
    return std::min(1.0, margin);
}

double spec_fom(const Metrics& metrics, const std::vector<MetricSpec>& specs) {
    double total = 0.0;
    for (const auto& s : specs) {
        auto it = metrics.find(s.metric);
        if (it == metrics.end()) throw Error(ErrorCode::UnknownMetric, "evaluator produced no '" + s.metric + "'");
        total += s.weight * spec_margin(it->second, s);
    }
    return 100.0 * total;
}

std::vector<MetricSpec> specs_from_json(const nlohmann::json& document) {
    std::vector<MetricSpec> specs;
    try {
        for (const auto& s : document) {
            MetricSpec spec{s.at("metric").get<std::string>(), s.at("target").get<double>(),
                            s.value("lower_is_better", false), s.value("weight", 1.0)};
            if (!(spec.target > 0.0)) throw Error(ErrorCode::InvalidConfig, "spec target for " + spec.metric + " must be > 0");
            specs.push_back(spec);
        }
    } catch (const nlohmann::json::exception& ex) {
        throw Error(ErrorCode::InvalidConfig, std::string("metric specs: ") + ex.what());
    }
    return specs;
}

FunctionEvaluator::FunctionEvaluator(Fn fn, std::string fom_metric) : fn_(std::move(fn)), fom_metric_(std::move(fom_metric)) {}

ActiveSubspaceEvaluator::ActiveSubspaceEvaluator(ActiveSubspaceConfig cfg) : cfg_(std::move(cfg)) {
    if (cfg_.optimum_z.empty()) throw Error(ErrorCode::InvalidConfig, "active subspace benchmark needs active variables");
    if (!(cfg_.span > 1.0) || !(cfg_.width > 0.0)) throw Error(ErrorCode::InvalidConfig, "span must exceed 1, width be > 0");
    for (const auto& [name, z] : cfg_.optimum_z) {
        if (!cfg_.reference.count(name)) throw Error(ErrorCode::InvalidConfig, "active variable " + name + " has no reference");
    }
}

Metrics ActiveSubspaceEvaluator::evaluate(const DesignPoint& point) {
    const auto values = point.values();
    double fit = 0.0;
    double deviation = 0.0;
    std::size_t inactive = 0;
    for (const auto& [name, ref] : cfg_.reference) {
        auto it = values.find(name);
        const double x = it == values.end() ? ref : it->second;
        const double z = std::log(x / ref) / std::log(cfg_.span);
        if (auto a = cfg_.optimum_z.find(name); a != cfg_.optimum_z.end()) {
            const double d = z - a->second;
            fit += d * d;
        } else {
            deviation += z * z;
            ++inactive;
        }
    }
    fit = std::exp(-fit / (2.0 * cfg_.width * cfg_.width));
    if (inactive) deviation /= static_cast<double>(inactive);
    return {{"active_fit", fit}, {"inactive_deviation", deviation}};
}

double ActiveSubspaceEvaluator::fom(const Metrics& metrics) const {
    return 100.0 * metrics.at("active_fit") * std::exp(-cfg_.penalty * metrics.at("inactive_deviation"));
}

SphereEvaluator::SphereEvaluator(std::map<std::string, double> center, std::map<std::string, double> range)
    : center_(std::move(center)), range_(std::move(range)) {}

Metrics SphereEvaluator::evaluate(const DesignPoint& point) {
    double sum = 0.0;
    for (const auto& [name, c] : center_) {
        const double x = point.value(name).value_or(c);
        const double r = range_.count(name) ? range_.at(name) : 1.0;
        sum += (x - c) * (x - c) / (r * r);
    }
    return {{"fom", 1.0 - sum}, {"sphere", sum}};
}

namespace {

constexpr double kVdd = 1.8;
constexpr double kVthN = 0.45;
constexpr double kVthP = 0.5;
constexpr double kKn = 300e-6;      // mu_n Cox, A/V^2
constexpr double kKp = 100e-6;      // mu_p Cox
constexpr double kLambdaL = 5e-8;   // channel-length modulation times L, m/V
constexpr double kBoltzT = 4.14e-21;
constexpr double kGamma = 2.0 / 3.0;
constexpr double kCox = 8.5e-3;     // F/m^2
constexpr double kKfN = 4e-25;      // flicker coefficients, V^2 F
constexpr double kKfP = 1e-25;
constexpr double kAvt = 3.5e-9;     // Pelgrom, V m
constexpr double kCapDensity = 2e-3;  // F/m^2
constexpr double kSheetR = 500.0;     // ohm per square, 1 um wide

double aspect(const Device& d) { return d.params.at("W") / d.params.at("L"); }
double k_of(const Device& d) { return d.kind == DeviceKind::MosP ? kKp : kKn; }
double vth_of(const Device& d) { return d.kind == DeviceKind::MosP ? kVthP : kVthN; }
double kf_of(const Device& d) { return d.kind == DeviceKind::MosP ? kKfP : kKfN; }
double gm_of(const Device& d, double id) { return std::sqrt(2.0 * k_of(d) * aspect(d) * std::max(id, 1e-15)); }
double ro_of(const Device& d, double id) { return d.params.at("L") / (kLambdaL * std::max(id, 1e-15)); }
double noise_psd(const Device& d, double gm) {
    const double flicker = gm * gm * kf_of(d) / (kCox * d.params.at("W") * d.params.at("L") * 1e3);
    return 4.0 * kBoltzT * kGamma * gm + flicker;
}

// Current through a diode-connected device fed by a resistor from the other rail.
double solve_bias(const Device& diode, double r) {
    double lo = 0.0;
    double hi = kVdd / r;
    for (int i = 0; i < 100; ++i) {
        const double mid = 0.5 * (lo + hi);
        const double vgs = vth_of(diode) + std::sqrt(2.0 * mid / (k_of(diode) * aspect(diode)));
        if (mid * r + vgs > kVdd) hi = mid;
        else lo = mid;
    }
    return 0.5 * (lo + hi);
}

struct BiasPoint {
    double current = 0.0;
    double aspect = 1.0;
    DeviceKind kind = DeviceKind::MosN;
};

std::map<std::string, BiasPoint> bias_nets(const CircuitNetlist& nl) {
    std::map<std::string, BiasPoint> out;
    for (const auto& d : nl.devices) {
        if (!is_mos(d.kind) || d.net("D") != d.net("G") || nl.role_of(d.net("S")) != NetRole::SupplyPort) continue;
        const std::string& n = d.net("D");
        for (const auto& r : nl.devices) {
            if (r.kind == DeviceKind::Resistor && (r.net("T1") == n || r.net("T2") == n)) {
                out[n] = {solve_bias(d, r.params.at("R")), aspect(d), d.kind};
                break;
            }
            if (r.kind == DeviceKind::ISource && (r.net("T1") == n || r.net("T2") == n)) {
                out[n] = {std::fabs(r.params.count("DC") ? r.params.at("DC") : 0.0), aspect(d), d.kind};
                break;
            }
        }
    }
    return out;
}

// Mirror current of a device gated by a bias net, or nullopt.
std::optional<double> mirrored(const Device& d, const std::map<std::string, BiasPoint>& bias,
                               const CircuitNetlist& nl) {
    if (!is_mos(d.kind)) return std::nullopt;
    auto it = bias.find(d.net("G"));
    if (it == bias.end() || it->second.kind != d.kind || d.net("D") == d.net("G")) return std::nullopt;
    if (nl.role_of(d.net("S")) != NetRole::SupplyPort) return std::nullopt;
    return it->second.current * aspect(d) / it->second.aspect;
}

double parallel(double a, double b) { return a * b / (a + b); }

}  // namespace

AfeEvaluator::AfeEvaluator(CircuitNetlist netlist, AfeModelConfig cfg) : netlist_(std::move(netlist)), cfg_(std::move(cfg)) {
    if (cfg_.inputs.size() != 2) throw Error(ErrorCode::InvalidConfig, "AFE model needs two input nets");
    if (cfg_.specs.empty()) throw Error(ErrorCode::InvalidConfig, "AFE model needs metric specs");
}

Metrics AfeEvaluator::evaluate(const DesignPoint& point) {
    return evaluate_netlist(apply_values(netlist_, point.values()));
}

Metrics AfeEvaluator::evaluate_netlist(const CircuitNetlist& nl) const {
    const auto bias = bias_nets(nl);
    double bias_current = 0.0;
    for (const auto& [net, b] : bias) bias_current += b.current;

    // Input devices per side and the tail that feeds them.
    std::vector<const Device*> side[2];
    std::set<std::string> input_drains;
    std::string tail;
    for (const auto& d : nl.devices) {
        if (!is_mos(d.kind)) continue;
        for (int s = 0; s < 2; ++s) {
            if (iequals(d.net("G"), cfg_.inputs[static_cast<std::size_t>(s)])) {
                side[s].push_back(&d);
                input_drains.insert(d.net("D"));
                if (nl.role_of(d.net("S")) != NetRole::SupplyPort) tail = d.net("S");
            }
        }
    }
    if (side[0].empty() || side[1].empty()) throw Error(ErrorCode::InvalidConfig, "no input devices on the AFE inputs");

    double tail_current = 0.0;
    double mirror_current = 0.0;  // all mirrored branches, for power
    std::map<std::string, double> current_of;
    for (const auto& d : nl.devices) {
        if (auto i = mirrored(d, bias, nl)) {
            current_of[d.name] = *i;
            mirror_current += *i;
            if (!tail.empty() && d.net("D") == tail) tail_current = *i;
        }
    }
    if (tail.empty() || tail_current <= 0.0) tail_current = bias_current;
    const double branch = tail_current / 2.0;

    double gm_side[2] = {0.0, 0.0};
    double psd_side[2] = {0.0, 0.0};
    double wl_side[2] = {0.0, 0.0};
    for (int s = 0; s < 2; ++s) {
        for (const Device* d : side[s]) {
            const double gm = gm_of(*d, branch);
            current_of[d->name] = branch;
            gm_side[s] += gm;
            psd_side[s] += noise_psd(*d, gm);
            wl_side[s] += d->params.at("W") * d->params.at("L");
        }
    }
    // Loads: front-end devices on an input drain that are neither inputs nor mirrors.
    double load_offset2 = 0.0;
    for (const auto& d : nl.devices) {
        if (!is_mos(d.kind) || !input_drains.count(d.net("D")) || current_of.count(d.name)) continue;
        const double gm = gm_of(d, branch);
        current_of[d.name] = branch;
        for (int s = 0; s < 2; ++s) {
            const bool on_side = std::any_of(side[s].begin(), side[s].end(),
                                             [&](const Device* in) { return in->net("D") == d.net("D"); });
            if (on_side) psd_side[s] += noise_psd(d, gm);
        }
        const double ratio = gm / std::max(gm_side[0], 1e-15);
        load_offset2 += ratio * ratio * kAvt * kAvt / (d.params.at("W") * d.params.at("L"));
    }
    const double gm_in = 0.5 * (gm_side[0] + gm_side[1]);
    const double v2 = (psd_side[0] + psd_side[1]) / (gm_in * gm_in);
    const double noise = std::sqrt(v2) * 1e9;
    const double offset =
        std::sqrt(kAvt * kAvt / wl_side[0] + kAvt * kAvt / wl_side[1] + load_offset2) * 1e3;

    // First-stage output resistance at the second-stage input.
    double r1 = 0.0;
    for (const auto& d : nl.devices) {
        if (!is_mos(d.kind) || d.net("D") != cfg_.output_stage_input || !current_of.count(d.name)) continue;
        const double ro = ro_of(d, current_of[d.name]);
        r1 = r1 == 0.0 ? ro : parallel(r1, ro);
    }
    double gain = gm_in * std::max(r1, 1.0);

    // Second stage: the device gated by the first-stage output, biased by the sink on its drain.
    double gm2 = 0.0;
    std::string stage2_out;
    for (const auto& d : nl.devices) {
        if (!is_mos(d.kind) || d.net("G") != cfg_.output_stage_input) continue;
        double i2 = 0.0;
        const Device* sink = nullptr;
        for (const auto& s : nl.devices) {
            if (&s != &d && is_mos(s.kind) && s.net("D") == d.net("D") && current_of.count(s.name)) {
                i2 = current_of[s.name];
                sink = &s;
            }
        }
        if (!sink) continue;
        gm2 = gm_of(d, i2);
        gain *= gm2 * parallel(ro_of(d, i2), ro_of(*sink, i2));
        stage2_out = d.net("D");
        break;
    }

    double cc = 0.0;
    double cl = 0.0;
    double area = 0.0;
    for (const auto& d : nl.devices) {
        if (is_mos(d.kind)) area += d.params.at("W") * d.params.at("L") * 1e12;
        if (d.kind == DeviceKind::Resistor) area += d.params.at("R") / kSheetR;
        if (d.kind != DeviceKind::Capacitor) continue;
        const double c = d.params.at("C");
        area += c / kCapDensity * 1e12;
        const bool grounded = nl.role_of(d.net("T1")) == NetRole::SupplyPort || nl.role_of(d.net("T2")) == NetRole::SupplyPort;
        const bool at_first = d.net("T1") == cfg_.output_stage_input || d.net("T2") == cfg_.output_stage_input;
        if (!grounded && at_first) cc += c;
        else if (grounded && !at_first && !bias.count(d.net("T1")) && !bias.count(d.net("T2"))) cl += c;
    }
    const double two_pi = 2.0 * std::numbers::pi;
    double bandwidth = cc > 0.0 ? gm_in / (two_pi * cc) : gm_in / (two_pi * 1e-12);
    if (gm2 > 0.0 && cl > 0.0) bandwidth = std::min(bandwidth, gm2 / (two_pi * cl) / 2.2);

    const double power = kVdd * (bias_current + mirror_current) * 1e6;
    return {{"noise", noise},
            {"area", area},
            {"power", power},
            {"gain", 20.0 * std::log10(std::max(gain, 1e-12))},
            {"bandwidth", bandwidth / 1e6},
            {"offset", offset}};
}

OscillatorEvaluator::OscillatorEvaluator(CircuitNetlist netlist, OscillatorModelConfig cfg)
    : netlist_(std::move(netlist)), cfg_(std::move(cfg)) {
    for (const auto& name : {cfg_.timing_capacitor, cfg_.timing_resistor, cfg_.comparator_tail}) {
        if (!netlist_.find_device(name)) throw Error(ErrorCode::InvalidConfig, "oscillator model: no device " + name);
    }
    if (cfg_.specs.empty()) throw Error(ErrorCode::InvalidConfig, "oscillator model needs metric specs");
}

Metrics OscillatorEvaluator::evaluate(const DesignPoint& point) {
    const CircuitNetlist nl = apply_values(netlist_, point.values());
    const auto bias = bias_nets(nl);
    double bias_current = 0.0;
    for (const auto& [net, b] : bias) bias_current += b.current;

    const Device& tail = *nl.find_device(cfg_.comparator_tail);
    const double i_tail = mirrored(tail, bias, nl).value_or(bias_current);

    // Reference threshold from a resistor divider on the comparator's other input.
    double vref = kVdd / 2.0;
    double divider_current = 0.0;
    std::vector<const Device*> rs;
    for (const auto& d : nl.devices) {
        if (d.kind == DeviceKind::Resistor && !iequals(d.name, cfg_.timing_resistor) && !bias.count(d.net("T1")) &&
            !bias.count(d.net("T2"))) {
            rs.push_back(&d);
        }
    }
    if (rs.size() == 2) {
        const Device* top = nl.role_of(rs[0]->net("T1")) == NetRole::SupplyPort && iequals(rs[0]->net("T1"), "vdd") ? rs[0] : rs[1];
        const Device* bottom = top == rs[0] ? rs[1] : rs[0];
        const double rt = top->params.at("R");
        const double rb = bottom->params.at("R");
        vref = kVdd * rb / (rt + rb);
        divider_current = kVdd / (rt + rb);
    }

    double wl_in = 0.0;
    double c_node = 10e-15;
    for (const auto& name : cfg_.comparator_inputs) {
        const Device* d = nl.find_device(name);
        if (!d) throw Error(ErrorCode::InvalidConfig, "oscillator model: no input device " + name);
        wl_in += d->params.at("W") * d->params.at("L");
        c_node += kCox * d->params.at("W") * d->params.at("L") / 3.0;
    }
    double area = 0.0;
    for (const auto& d : nl.devices) {
        if (is_mos(d.kind)) {
            area += d.params.at("W") * d.params.at("L") * 1e12;
            // Mirror loads and the inverter add gate capacitance to the comparator node.
            if (!iequals(d.name, cfg_.comparator_tail) &&
                std::find_if(cfg_.comparator_inputs.begin(), cfg_.comparator_inputs.end(),
                             [&](const std::string& n) { return iequals(n, d.name); }) == cfg_.comparator_inputs.end() &&
                !bias.count(d.net("G"))) {
                c_node += kCox * d.params.at("W") * d.params.at("L") * 0.25;
            }
        }
        if (d.kind == DeviceKind::Resistor) area += d.params.at("R") / kSheetR;
        if (d.kind == DeviceKind::Capacitor) area += d.params.at("C") / kCapDensity * 1e12;
    }
    const double sigma_os = kAvt * std::sqrt(2.0 / (wl_in / static_cast<double>(cfg_.comparator_inputs.size())));
    const double vth = std::min(vref + 3.0 * sigma_os, kVdd * 0.98);
    const double r = nl.find_device(cfg_.timing_resistor)->params.at("R");
    const double c = nl.find_device(cfg_.timing_capacitor)->params.at("C");
    const double period = r * c * std::log(kVdd / (kVdd - vth));
    const double delay = c_node * (kVdd / 2.0) / std::max(i_tail, 1e-12);
    const double freq = 1.0 / (period + 2.0 * delay);
    const double error = std::fabs(freq - cfg_.target_frequency) / cfg_.target_frequency * 100.0;
    const double power = kVdd * (bias_current + i_tail + divider_current + kVdd / (2.0 * r)) * 1e6;
    return {{"freq_error", error}, {"frequency", freq}, {"power", power}, {"area", area},
            {"offset", 3.0 * sigma_os * 1e3}, {"delay", delay * 1e9}};
}

EvaluatorFactory make_evaluator_factory(const nlohmann::json& document) {
    const std::string kind = document.value("kind", std::string());
    const nlohmann::json params = document.value("params", nlohmann::json::object());
    try {
        if (kind == "active_subspace") {
            ActiveSubspaceConfig base;
            base.optimum_z = params.at("active").get<std::map<std::string, double>>();
            base.span = params.value("span", 4.0);
            base.width = params.value("width", 0.7);
            base.penalty = params.value("penalty", 1.5);
            return [base](const CircuitNetlist& nl) {
                ActiveSubspaceConfig cfg = base;
                for (const auto& v : design_variables(nl)) cfg.reference[v.name] = v.value;
                return std::unique_ptr<Evaluator>(std::make_unique<ActiveSubspaceEvaluator>(cfg));
            };
        }
        if (kind == "afe") {
            AfeModelConfig cfg;
            if (params.contains("inputs")) cfg.inputs = params.at("inputs").get<std::vector<std::string>>();
            cfg.output_stage_input = params.value("output_stage_input", cfg.output_stage_input);
            cfg.specs = specs_from_json(params.at("specs"));
            return [cfg](const CircuitNetlist& nl) { return std::unique_ptr<Evaluator>(std::make_unique<AfeEvaluator>(nl, cfg)); };
        }
        if (kind == "oscillator") {
            OscillatorModelConfig cfg;
            cfg.target_frequency = params.value("target_frequency", cfg.target_frequency);
            cfg.timing_capacitor = params.value("timing_capacitor", cfg.timing_capacitor);
            cfg.timing_resistor = params.value("timing_resistor", cfg.timing_resistor);
            cfg.comparator_tail = params.value("comparator_tail", cfg.comparator_tail);
            if (params.contains("comparator_inputs")) {
                cfg.comparator_inputs = params.at("comparator_inputs").get<std::vector<std::string>>();
            }
            cfg.specs = specs_from_json(params.at("specs"));
            return [cfg](const CircuitNetlist& nl) {
                return std::unique_ptr<Evaluator>(std::make_unique<OscillatorEvaluator>(nl, cfg));
            };
        }
        if (kind == "sphere") {
            auto center = params.at("center").get<std::map<std::string, double>>();
            auto range = params.value("range", std::map<std::string, double>{});
            return [center, range](const CircuitNetlist&) {
                return std::unique_ptr<Evaluator>(std::make_unique<SphereEvaluator>(center, range));
            };
        }
    } catch (const nlohmann::json::exception& ex) {
        throw Error(ErrorCode::InvalidConfig, "evaluator '" + kind + "': " + ex.what());
    }
    throw Error(ErrorCode::InvalidConfig, "unknown evaluator kind '" + kind + "'");
}

}  // namespace heart
