// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "heart/netlist.hpp"
#include "heart/optimizer.hpp"

#include <nlohmann/json.hpp>

#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

namespace heart {

// Copy of `netlist` with `device.param` values overwritten.
CircuitNetlist apply_values(const CircuitNetlist& netlist, const std::map<std::string, double>& values);

// One spec term of a normalized-spec FoM.
struct MetricSpec {
    std::string metric;
    double target = 1.0;
    bool lower_is_better = false;
    double weight = 1.0;
};

// Relative margin against the target, capped at +1 (twice as good as the target
// earns no more credit).
double spec_margin(double value, const MetricSpec& spec);

// 100 * sum of weight * capped margin.
double spec_fom(const Metrics& metrics, const std::vector<MetricSpec>& specs);

std::vector<MetricSpec> specs_from_json(const nlohmann::json& document);

// Wraps a plain function; handy for tests and closed-form benchmarks.
class FunctionEvaluator : public Evaluator {
public:
    using Fn = std::function<Metrics(const DesignPoint&)>;
    FunctionEvaluator(Fn fn, std::string fom_metric = "fom");
    Metrics evaluate(const DesignPoint& point) override { return fn_(point); }
    double fom(const Metrics& metrics) const override { return metrics.at(fom_metric_); }
    bool concurrent_safe() const override { return true; }

private:
    Fn fn_;
    std::string fom_metric_;
};

// Synthetic sizing benchmark. Every variable is measured in units of its
// bound span around the reference (z in [-1, 1]). FoM is
// 100 * exp(-|z_a - z*|^2 / 2 width^2) * exp(-penalty * mean(z_i^2)) over the
// active (a) and inactive (i) variables, so the reference is already optimal
// in the inactive ones.
struct ActiveSubspaceConfig {
    std::map<std::string, double> reference;  // every variable
    std::map<std::string, double> optimum_z;  // active variables
    double span = 4.0;
    double width = 0.7;
    double penalty = 1.5;
};

class ActiveSubspaceEvaluator : public Evaluator {
public:
    explicit ActiveSubspaceEvaluator(ActiveSubspaceConfig cfg);
    Metrics evaluate(const DesignPoint& point) override;
    double fom(const Metrics& metrics) const override;
    bool concurrent_safe() const override { return true; }

private:
    ActiveSubspaceConfig cfg_;
};

// Normalized sphere: fom = 1 - sum(((x - c) / (upper - lower))^2); optimum 1.
class SphereEvaluator : public Evaluator {
public:
    SphereEvaluator(std::map<std::string, double> center, std::map<std::string, double> range);
    Metrics evaluate(const DesignPoint& point) override;
    double fom(const Metrics& metrics) const override { return metrics.at("fom"); }
    bool concurrent_safe() const override { return true; }

private:
    std::map<std::string, double> center_;
    std::map<std::string, double> range_;
};

// Square-law analytic front-end surrogate for the AFE fixtures. Devices are
// recognised from connectivity: the diode-connected bias device sets the
// reference current through the bias resistor, gate-sharing devices mirror
// it, and devices gated by the input nets form the input stage whatever the
// topology. Metrics: noise (nV/rtHz at 1 kHz), area (um^2), power (uW),
// gain (dB), bandwidth (MHz), offset (mV).
struct AfeModelConfig {
    std::vector<std::string> inputs{"inp", "inn"};
    std::string output_stage_input = "o1";
    std::vector<MetricSpec> specs;
};

class AfeEvaluator : public Evaluator {
public:
    AfeEvaluator(CircuitNetlist netlist, AfeModelConfig cfg);
    Metrics evaluate(const DesignPoint& point) override;
    double fom(const Metrics& metrics) const override { return spec_fom(metrics, cfg_.specs); }
    bool concurrent_safe() const override { return true; }

    Metrics evaluate_netlist(const CircuitNetlist& netlist) const;

private:
    CircuitNetlist netlist_;
    AfeModelConfig cfg_;
};

// Relaxation-oscillator surrogate: the RC timing branch sets the nominal
// period; comparator offset (Pelgrom) and delay (tail current against node
// capacitance) pull the frequency off target. Metrics: freq_error (%),
// power (uW), area (um^2).
struct OscillatorModelConfig {
    double target_frequency = 1.0e6;
    std::string timing_capacitor = "C1";
    std::string timing_resistor = "Rc";
    std::vector<std::string> comparator_inputs{"M1", "M2"};
    std::string comparator_tail = "M5";
    std::vector<MetricSpec> specs;
};

class OscillatorEvaluator : public Evaluator {
public:
    OscillatorEvaluator(CircuitNetlist netlist, OscillatorModelConfig cfg);
    Metrics evaluate(const DesignPoint& point) override;
    double fom(const Metrics& metrics) const override { return spec_fom(metrics, cfg_.specs); }
    bool concurrent_safe() const override { return true; }

private:
    CircuitNetlist netlist_;
    OscillatorModelConfig cfg_;
};

// Builds an evaluator for a (possibly swapped) netlist from
// {"kind": "active_subspace"|"afe"|"oscillator"|"sphere", "params": {...}}.
using EvaluatorFactory = std::function<std::unique_ptr<Evaluator>(const CircuitNetlist&)>;
EvaluatorFactory make_evaluator_factory(const nlohmann::json& document);

}  // namespace heart
