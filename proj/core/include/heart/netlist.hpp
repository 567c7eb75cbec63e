// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace heart {

enum class DeviceKind { MosN, MosP, Resistor, Capacitor, Inductor, VSource, ISource };

std::string_view to_string(DeviceKind kind);
std::optional<DeviceKind> device_kind_from_string(std::string_view text);
inline bool is_mos(DeviceKind kind) { return kind == DeviceKind::MosN || kind == DeviceKind::MosP; }

enum class NetRole { SupplyPort, SignalPort, InternalNet };

std::string_view to_string(NetRole role);
std::optional<NetRole> net_role_from_string(std::string_view text);

struct Terminal {
    std::string label;  // D/G/S for MOS, T1/T2 otherwise
    std::string net;

    bool operator==(const Terminal&) const = default;
};

struct Device {
    std::string name;
    DeviceKind kind = DeviceKind::Resistor;
    std::vector<Terminal> terminals;
    // Upper-case parameter names. W/L in meters, R in ohms, C in farads,
    // L (inductors) in henries, DC/AC for sources.
    std::map<std::string, double> params;
    // MOS model keyword as written in the source ("nmos", "pmos", ...).
    std::string model;

    // Net attached to `label`; throws std::out_of_range when absent.
    const std::string& net(std::string_view label) const;
    bool has_terminal(std::string_view label) const;

    bool operator==(const Device&) const = default;
};

struct Net {
    std::string name;
    NetRole role = NetRole::InternalNet;

    bool operator==(const Net&) const = default;
};

// Pin declaration from a `*.PININFO name:dir ...` comment (CDL convention).
// Directions: I, O, B are signal pins, P is a high rail, G a low rail.
struct PinInfo {
    std::string net;
    char direction = 'B';

    bool operator==(const PinInfo&) const = default;
};

struct CircuitNetlist {
    std::string name;
    std::vector<Device> devices;  // source order
    std::vector<Net> nets;        // first-appearance order
    std::vector<std::string> raw_lines;
    std::vector<PinInfo> pins;

    const Device* find_device(std::string_view name) const;
    const Net* find_net(std::string_view name) const;
    NetRole role_of(std::string_view net) const;
    std::size_t terminal_count() const;
};

// Structural equality: name, devices (with parameters compared exactly), nets
// and roles, pin declarations. raw_lines are ignored.
bool structurally_equal(const CircuitNetlist& a, const CircuitNetlist& b);

struct ParseOptions {
    // Expand one level of `.subckt` / `X` instantiation with `Xinst.` prefixes.
    bool flatten = false;
    // Treat the first line as a SPICE title card.
    bool first_line_is_title = false;
    // Netlist name when the source has no `.title`.
    std::string name = "netlist";
    // Nets that keep their name inside expanded subcircuits, in addition to
    // `.global` declarations and the default rail names.
    std::vector<std::string> global_nets;
};

CircuitNetlist parse_netlist(std::string_view source, const ParseOptions& options = {});
CircuitNetlist parse_netlist_file(const std::string& path, ParseOptions options = {});

// Supply rails are split into high (VDD-like) and low (GND-like) sides; the
// decomposition uses them as the two BFS source sets.
struct RailConfig {
    std::vector<std::string> high_rails{"vdd"};
    std::vector<std::string> low_rails{"vss", "gnd", "0"};
    std::vector<std::string> signal_ports;

    // Adds a supply alias; names containing vdd/vcc/vpp go to the high side.
    void add_supply(const std::string& name);
    bool is_high(std::string_view net) const;
    bool is_low(std::string_view net) const;
    bool is_supply(std::string_view net) const { return is_high(net) || is_low(net); }
    bool is_signal_port(std::string_view net) const;
};

// Merges the netlist's *.PININFO declarations into `rails`.
RailConfig effective_rails(const CircuitNetlist& netlist, const RailConfig& rails);

// Labels every net SUPPLY_PORT / SIGNAL_PORT / INTERNAL_NET.
// Throws MissingSupply when no net matches a rail.
CircuitNetlist annotate_nets(const CircuitNetlist& netlist, const RailConfig& rails);

std::string serialize_netlist(const CircuitNetlist& netlist);

// SPICE number with unit suffix (f p n u m k meg g t, trailing letters ignored).
std::optional<double> parse_spice_value(std::string_view text);
// Shortest engineering-notation text that parses back to exactly `value`.
std::string format_spice_value(double value);

// Lower-cased copy; identifiers compare case-insensitively throughout.
std::string lower(std::string_view text);
bool iequals(std::string_view a, std::string_view b);

}  // namespace heart
