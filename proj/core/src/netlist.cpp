// SPDX-License-Identifier: Apache-2.0
#include "heart/netlist.hpp"

#include "heart/error.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

namespace heart {

std::string lower(std::string_view text) {
    std::string out(text);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

bool iequals(std::string_view a, std::string_view b) {
    return a.size() == b.size() && std::equal(a.begin(), a.end(), b.begin(), [](unsigned char x, unsigned char y) {
               return std::tolower(x) == std::tolower(y);
           });
}

namespace {

std::string upper(std::string_view text) {
    std::string out(text);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
    return out;
}

struct KindName {
    DeviceKind kind;
    std::string_view name;
};

constexpr std::array<KindName, 7> kKindNames{{
    {DeviceKind::MosN, "MOS_N"},
    {DeviceKind::MosP, "MOS_P"},
    {DeviceKind::Resistor, "RESISTOR"},
    {DeviceKind::Capacitor, "CAPACITOR"},
    {DeviceKind::Inductor, "INDUCTOR"},
    {DeviceKind::VSource, "VSOURCE"},
    {DeviceKind::ISource, "ISOURCE"},
}};

struct Scale {
    std::string_view suffix;
    int exponent;
};

// Output order for format_spice_value: largest first.
constexpr std::array<Scale, 10> kScales{{
    {"t", 12}, {"g", 9}, {"meg", 6}, {"k", 3}, {"", 0},
    {"m", -3}, {"u", -6}, {"n", -9}, {"p", -12}, {"f", -15},
}};

}  // namespace

std::string_view to_string(DeviceKind kind) {
    for (const auto& entry : kKindNames) {
        if (entry.kind == kind) return entry.name;
    }
    return "UNKNOWN";
}

std::optional<DeviceKind> device_kind_from_string(std::string_view text) {
    for (const auto& entry : kKindNames) {
        if (iequals(entry.name, text)) return entry.kind;
    }
    return std::nullopt;
}

std::string_view to_string(NetRole role) {
    switch (role) {
    case NetRole::SupplyPort: return "SUPPLY_PORT";
    case NetRole::SignalPort: return "SIGNAL_PORT";
    case NetRole::InternalNet: return "INTERNAL_NET";
    }
    return "INTERNAL_NET";
}

std::optional<NetRole> net_role_from_string(std::string_view text) {
    // SUPPLY_RAIL is accepted as a synonym of SUPPLY_PORT.
    if (iequals(text, "SUPPLY_PORT") || iequals(text, "SUPPLY_RAIL")) return NetRole::SupplyPort;
    if (iequals(text, "SIGNAL_PORT")) return NetRole::SignalPort;
    if (iequals(text, "INTERNAL_NET")) return NetRole::InternalNet;
    return std::nullopt;
}

const std::string& Device::net(std::string_view label) const {
    for (const auto& t : terminals) {
        if (t.label == label) return t.net;
    }
    throw std::out_of_range("device " + name + " has no terminal " + std::string(label));
}

bool Device::has_terminal(std::string_view label) const {
    return std::any_of(terminals.begin(), terminals.end(), [&](const Terminal& t) { return t.label == label; });
}

const Device* CircuitNetlist::find_device(std::string_view device_name) const {
    for (const auto& d : devices) {
        if (iequals(d.name, device_name)) return &d;
    }
    return nullptr;
}

const Net* CircuitNetlist::find_net(std::string_view net_name) const {
    for (const auto& n : nets) {
        if (iequals(n.name, net_name)) return &n;
    }
    return nullptr;
}

NetRole CircuitNetlist::role_of(std::string_view net_name) const {
    const Net* n = find_net(net_name);
    return n ? n->role : NetRole::InternalNet;
}

std::size_t CircuitNetlist::terminal_count() const {
    std::size_t count = 0;
    for (const auto& d : devices) count += d.terminals.size();
    return count;
}

bool structurally_equal(const CircuitNetlist& a, const CircuitNetlist& b) {
    return a.name == b.name && a.devices == b.devices && a.nets == b.nets && a.pins == b.pins;
}

// ---------------------------------------------------------------------------
// Values

std::optional<double> parse_spice_value(std::string_view text) {
    if (text.empty()) return std::nullopt;
    std::size_t i = 0;
    if (text[i] == '+' || text[i] == '-') ++i;
    const std::size_t digits_begin = i;
    while (i < text.size() && (std::isdigit(static_cast<unsigned char>(text[i])) || text[i] == '.')) ++i;
    if (i == digits_begin) return std::nullopt;
    bool has_exponent = false;
    if (i < text.size() && (text[i] == 'e' || text[i] == 'E')) {
        std::size_t j = i + 1;
        if (j < text.size() && (text[j] == '+' || text[j] == '-')) ++j;
        if (j < text.size() && std::isdigit(static_cast<unsigned char>(text[j]))) {
            while (j < text.size() && std::isdigit(static_cast<unsigned char>(text[j]))) ++j;
            i = j;
            has_exponent = true;
        }
    }
    std::string number(text.substr(0, i));
    const std::string suffix = lower(text.substr(i));
    int exponent = 0;
    if (suffix.rfind("meg", 0) == 0) {
        exponent = 6;
    } else if (suffix.rfind("mil", 0) == 0) {
        double mils = 0.0;
        if (std::from_chars(number.data(), number.data() + number.size(), mils).ec != std::errc{}) return std::nullopt;
        return mils * 25.4e-6;
    } else if (!suffix.empty()) {
        switch (suffix[0]) {
        case 't': exponent = 12; break;
        case 'g': exponent = 9; break;
        case 'k': exponent = 3; break;
        case 'm': exponent = -3; break;
        case 'u': exponent = -6; break;
        case 'n': exponent = -9; break;
        case 'p': exponent = -12; break;
        case 'f': exponent = -15; break;
        case 'a': exponent = -18; break;
        default:
            // Bare unit names such as "ohm", "v", "h" carry no scale.
            if (!std::isalpha(static_cast<unsigned char>(suffix[0]))) return std::nullopt;
            break;
        }
    }
    double value = 0.0;
    if (!has_exponent && exponent != 0) {
        // Let the decimal parser round once: "0.18u" -> "0.18e-6".
        number += "e" + std::to_string(exponent);
        exponent = 0;
    }
    const char* begin = number.data() + (number[0] == '+' ? 1 : 0);
    auto [ptr, ec] = std::from_chars(begin, number.data() + number.size(), value);
    if (ec != std::errc{} || ptr != number.data() + number.size()) return std::nullopt;
    if (exponent != 0) value *= std::pow(10.0, exponent);
    return value;
}

std::string format_spice_value(double value) {
    if (value == 0.0) return "0";
    const double magnitude = std::fabs(value);
    char buffer[64];
    for (const auto& scale : kScales) {
        const double unit = std::pow(10.0, scale.exponent);
        if (magnitude < unit && scale.exponent != -15) continue;
        const double mantissa = value / unit;
        if (std::fabs(mantissa) >= 1000.0) break;
        for (int precision = 1; precision <= 17; ++precision) {
            std::snprintf(buffer, sizeof buffer, "%.*g", precision, mantissa);
            std::string candidate = std::string(buffer) + std::string(scale.suffix);
            if (candidate.find('e') != std::string::npos) continue;
            auto back = parse_spice_value(candidate);
            if (back && *back == value) return candidate;
        }
        break;
    }
    std::snprintf(buffer, sizeof buffer, "%.17g", value);
    return buffer;
}

// ---------------------------------------------------------------------------
// Parsing

namespace {

struct LogicalLine {
    int line = 0;  // 1-based source line of the first physical line
    std::string text;
};

std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> raw;
    std::istringstream in{std::string(text)};
    std::string token;
    while (in >> token) raw.push_back(token);
    // Re-join "W = 2u" and "W= 2u" / "W =2u" into "W=2u".
    std::vector<std::string> out;
    for (std::size_t i = 0; i < raw.size(); ++i) {
        std::string t = raw[i];
        while (i + 1 < raw.size() && (t.back() == '=' || raw[i + 1].front() == '=')) {
            t += raw[++i];
        }
        out.push_back(std::move(t));
    }
    return out;
}

bool is_param(const std::string& token) {
    const auto pos = token.find('=');
    return pos != std::string::npos && pos > 0;
}

std::optional<DeviceKind> mos_kind_from_model(const std::string& model) {
    const std::string m = lower(model);
    if (m == "p" || m.find("pmos") != std::string::npos || m.find("pfet") != std::string::npos ||
        m.find("pch") != std::string::npos) {
        return DeviceKind::MosP;
    }
    if (m == "n" || m.find("nmos") != std::string::npos || m.find("nfet") != std::string::npos ||
        m.find("nch") != std::string::npos) {
        return DeviceKind::MosN;
    }
    return std::nullopt;
}

double positive_value(const LogicalLine& line, const std::string& token, const std::string& what) {
    auto v = parse_spice_value(token);
    if (!v) throw SyntaxError(line.line, token, "malformed value for " + what);
    if (!(*v > 0.0)) throw SyntaxError(line.line, token, what + " must be strictly positive");
    return *v;
}

void parse_params(const LogicalLine& line, const std::vector<std::string>& tokens, std::size_t first, Device& device) {
    for (std::size_t i = first; i < tokens.size(); ++i) {
        const auto& tok = tokens[i];
        const auto pos = tok.find('=');
        const std::string key = upper(tok.substr(0, pos));
        const std::string text = tok.substr(pos + 1);
        auto value = parse_spice_value(text);
        if (!value) throw SyntaxError(line.line, tok, "malformed parameter value");
        if ((key == "W" || key == "L" || key == "R" || key == "C") && !(*value > 0.0)) {
            throw SyntaxError(line.line, tok, "parameter " + key + " must be strictly positive");
        }
        device.params[key] = *value;
    }
}

Device parse_device_card(const LogicalLine& line, const std::vector<std::string>& tokens) {
    Device device;
    device.name = tokens[0];
    const char letter = static_cast<char>(std::toupper(static_cast<unsigned char>(tokens[0][0])));

    std::size_t first_param = tokens.size();
    for (std::size_t i = 1; i < tokens.size(); ++i) {
        if (is_param(tokens[i])) {
            first_param = i;
            break;
        }
    }
    for (std::size_t i = first_param; i < tokens.size(); ++i) {
        if (!is_param(tokens[i])) throw SyntaxError(line.line, tokens[i], "positional field after parameters");
    }
    const std::vector<std::string> pos(tokens.begin() + 1, tokens.begin() + static_cast<long>(first_param));

    switch (letter) {
    case 'M': {
        if (pos.size() != 4 && pos.size() != 5) {
            throw SyntaxError(line.line, tokens[0], "MOS card needs drain gate source [bulk] model");
        }
        device.model = pos.back();
        auto kind = mos_kind_from_model(device.model);
        if (!kind) throw SyntaxError(line.line, device.model, "unknown MOS model (expected nmos/pmos)");
        device.kind = *kind;
        // Bulk terminal (pos[3] in the 5-field form) is dropped.
        device.terminals = {{"D", pos[0]}, {"G", pos[1]}, {"S", pos[2]}};
        parse_params(line, tokens, first_param, device);
        break;
    }
    case 'R':
    case 'C':
    case 'L': {
        device.kind = letter == 'R' ? DeviceKind::Resistor : letter == 'C' ? DeviceKind::Capacitor : DeviceKind::Inductor;
        const std::string key(1, letter);
        if (pos.size() != 2 && pos.size() != 3) {
            throw SyntaxError(line.line, tokens[0], "two-terminal card needs n1 n2 value");
        }
        device.terminals = {{"T1", pos[0]}, {"T2", pos[1]}};
        parse_params(line, tokens, first_param, device);
        if (pos.size() == 3) {
            device.params[key] = positive_value(line, pos[2], key);
        } else if (!device.params.count(key)) {
            throw SyntaxError(line.line, tokens[0], "missing " + key + " value");
        }
        if (!(device.params[key] > 0.0)) throw SyntaxError(line.line, tokens[0], key + " must be strictly positive");
        break;
    }
    case 'V':
    case 'I': {
        device.kind = letter == 'V' ? DeviceKind::VSource : DeviceKind::ISource;
        if (pos.size() < 2) throw SyntaxError(line.line, tokens[0], "source card needs n+ n-");
        device.terminals = {{"T1", pos[0]}, {"T2", pos[1]}};
        double dc = 0.0;
        for (std::size_t i = 2; i < pos.size(); ++i) {
            const std::string word = lower(pos[i]);
            if (word == "dc" || word == "ac") {
                if (i + 1 >= pos.size()) throw SyntaxError(line.line, pos[i], "missing value after " + word);
                auto v = parse_spice_value(pos[i + 1]);
                if (!v) throw SyntaxError(line.line, pos[i + 1], "malformed source value");
                if (word == "dc") dc = *v;
                else device.params["AC"] = *v;
                ++i;
            } else if (auto v = parse_spice_value(pos[i]); v && i == 2) {
                dc = *v;
            } else {
                throw SyntaxError(line.line, pos[i], "unsupported source specification");
            }
        }
        device.params["DC"] = dc;
        parse_params(line, tokens, first_param, device);
        break;
    }
    default:
        throw Error(ErrorCode::UnsupportedCard,
                    "line " + std::to_string(line.line) + ": card '" + std::string(1, letter) + "' (" + tokens[0] + ")");
    }
    return device;
}

std::vector<LogicalLine> join_lines(std::string_view source, std::vector<std::string>& raw_lines) {
    std::vector<LogicalLine> logical;
    std::istringstream in{std::string(source)};
    std::string line;
    int number = 0;
    while (std::getline(in, line)) {
        ++number;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        raw_lines.push_back(line);
        std::size_t first = line.find_first_not_of(" \t");
        if (first == std::string::npos) continue;
        std::string body = line.substr(first);
        if (body[0] == '*') {
            // Comments are kept only for *.PININFO.
            if (lower(body).rfind("*.pininfo", 0) == 0) logical.push_back({number, body});
            continue;
        }
        if (auto dollar = body.find(" $"); dollar != std::string::npos) body.erase(dollar);
        if (body[0] == '+') {
            if (logical.empty()) throw SyntaxError(number, "+", "continuation without a preceding card");
            logical.back().text += " " + body.substr(1);
            continue;
        }
        logical.push_back({number, body});
    }
    return logical;
}

struct SubcktDef {
    std::string name;
    std::vector<std::string> ports;
    std::vector<LogicalLine> body;
};

class NetTable {
public:
    // Returns the canonical spelling (first seen) for `name`.
    const std::string& intern(const std::string& name) {
        const std::string key = lower(name);
        auto it = index_.find(key);
        if (it != index_.end()) return nets_[it->second].name;
        index_.emplace(key, nets_.size());
        nets_.push_back({name, NetRole::InternalNet});
        return nets_.back().name;
    }
    std::vector<Net> take() { return std::move(nets_); }

private:
    std::vector<Net> nets_;
    std::unordered_map<std::string, std::size_t> index_;
};

bool is_ignored_control(const std::string& card) {
    static const std::set<std::string> ignored{".option", ".options", ".op",    ".tran",  ".ac", ".dc",
                                               ".temp",   ".model",   ".probe", ".print", ".save"};
    return ignored.count(card) > 0;
}

}  // namespace

CircuitNetlist parse_netlist(std::string_view source, const ParseOptions& options) {
    CircuitNetlist netlist;
    netlist.name = options.name;
    auto lines = join_lines(source, netlist.raw_lines);

    std::vector<LogicalLine> top;
    std::vector<SubcktDef> subckts;
    std::set<std::string> globals{"vdd", "vss", "gnd", "0"};
    for (const auto& g : options.global_nets) globals.insert(lower(g));

    SubcktDef* open = nullptr;
    bool title_pending = options.first_line_is_title;
    for (const auto& line : lines) {
        if (title_pending) {
            title_pending = false;
            if (line.line == 1) {
                netlist.name = line.text;
                continue;
            }
        }
        auto tokens = tokenize(line.text);
        if (tokens.empty()) continue;
        const std::string head = lower(tokens[0]);
        if (head == "*.pininfo") {
            for (std::size_t i = 1; i < tokens.size(); ++i) {
                const auto colon = tokens[i].rfind(':');
                if (colon == std::string::npos || colon + 1 >= tokens[i].size()) {
                    throw SyntaxError(line.line, tokens[i], "PININFO entry must be net:dir");
                }
                const char dir = static_cast<char>(std::toupper(static_cast<unsigned char>(tokens[i][colon + 1])));
                if (std::string("IOBPG").find(dir) == std::string::npos) {
                    throw SyntaxError(line.line, tokens[i], "PININFO direction must be one of I O B P G");
                }
                netlist.pins.push_back({tokens[i].substr(0, colon), dir});
            }
            continue;
        }
        if (head[0] == '.') {
            if (head == ".end") break;
            if (head == ".title") {
                const auto pos = line.text.find_first_of(" \t");
                if (pos != std::string::npos) {
                    netlist.name = line.text.substr(line.text.find_first_not_of(" \t", pos));
                }
                continue;
            }
            if (head == ".global") {
                for (std::size_t i = 1; i < tokens.size(); ++i) globals.insert(lower(tokens[i]));
                continue;
            }
            if (head == ".subckt") {
                if (!options.flatten) {
                    throw Error(ErrorCode::UnsupportedCard,
                                "line " + std::to_string(line.line) + ": .subckt requires the flatten option");
                }
                if (open) throw Error(ErrorCode::UnsupportedCard, "line " + std::to_string(line.line) + ": nested .subckt");
                if (tokens.size() < 2) throw SyntaxError(line.line, tokens[0], ".subckt needs a name");
                subckts.push_back({lower(tokens[1]), {tokens.begin() + 2, tokens.end()}, {}});
                open = &subckts.back();
                continue;
            }
            if (head == ".ends") {
                if (!open) throw SyntaxError(line.line, tokens[0], ".ends without .subckt");
                open = nullptr;
                continue;
            }
            if (is_ignored_control(head)) continue;
            throw Error(ErrorCode::UnsupportedCard, "line " + std::to_string(line.line) + ": control card " + tokens[0]);
        }
        if (open) {
            if (std::toupper(static_cast<unsigned char>(head[0])) == 'X') {
                throw Error(ErrorCode::UnsupportedCard,
                            "line " + std::to_string(line.line) + ": card 'X' inside .subckt (one level only)");
            }
            open->body.push_back(line);
        } else {
            top.push_back(line);
        }
    }
    if (open) throw SyntaxError(lines.empty() ? 0 : lines.back().line, open->name, "unterminated .subckt");

    NetTable nets;
    std::unordered_map<std::string, int> seen_devices;
    auto add_device = [&](Device device, int line_no) {
        const std::string key = lower(device.name);
        if (seen_devices.count(key)) {
            throw SyntaxError(line_no, device.name,
                              "duplicate device name (first on line " + std::to_string(seen_devices[key]) + ")");
        }
        seen_devices[key] = line_no;
        for (auto& t : device.terminals) t.net = nets.intern(t.net);
        netlist.devices.push_back(std::move(device));
    };

    for (const auto& line : top) {
        auto tokens = tokenize(line.text);
        const char letter = static_cast<char>(std::toupper(static_cast<unsigned char>(tokens[0][0])));
        if (letter != 'X') {
            add_device(parse_device_card(line, tokens), line.line);
            continue;
        }
        if (!options.flatten) {
            throw Error(ErrorCode::UnsupportedCard,
                        "line " + std::to_string(line.line) + ": card 'X' requires the flatten option");
        }
        if (tokens.size() < 2) throw SyntaxError(line.line, tokens[0], "X card needs nets and a subcircuit name");
        const std::string sub_name = lower(tokens.back());
        auto def = std::find_if(subckts.begin(), subckts.end(), [&](const SubcktDef& s) { return s.name == sub_name; });
        if (def == subckts.end()) throw SyntaxError(line.line, tokens.back(), "undefined subcircuit");
        const std::vector<std::string> actuals(tokens.begin() + 1, tokens.end() - 1);
        if (actuals.size() != def->ports.size()) {
            throw SyntaxError(line.line, tokens[0], "port count mismatch for " + def->name);
        }
        std::unordered_map<std::string, std::string> binding;
        for (std::size_t i = 0; i < actuals.size(); ++i) binding[lower(def->ports[i])] = actuals[i];
        const std::string prefix = tokens[0] + ".";
        for (const auto& body_line : def->body) {
            auto body_tokens = tokenize(body_line.text);
            Device device = parse_device_card(body_line, body_tokens);
            device.name = prefix + device.name;
            for (auto& t : device.terminals) {
                const std::string key = lower(t.net);
                if (auto b = binding.find(key); b != binding.end()) t.net = b->second;
                else if (!globals.count(key)) t.net = prefix + t.net;
            }
            add_device(std::move(device), line.line);
        }
    }
    if (netlist.devices.empty()) throw SyntaxError(0, netlist.name, "netlist contains no devices");
    netlist.nets = nets.take();
    for (auto& pin : netlist.pins) {
        if (const Net* n = netlist.find_net(pin.net)) pin.net = n->name;
    }
    return netlist;
}

CircuitNetlist parse_netlist_file(const std::string& path, ParseOptions options) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::IoError, "cannot open " + path);
    std::stringstream buffer;
    buffer << in.rdbuf();
    if (options.name == "netlist") {
        auto slash = path.find_last_of('/');
        std::string stem = slash == std::string::npos ? path : path.substr(slash + 1);
        if (auto dot = stem.rfind('.'); dot != std::string::npos && dot > 0) stem.erase(dot);
        options.name = stem;
    }
    return parse_netlist(buffer.str(), options);
}

// ---------------------------------------------------------------------------
// Rails and roles

namespace {

bool contains_name(const std::vector<std::string>& names, std::string_view net) {
    return std::any_of(names.begin(), names.end(), [&](const std::string& n) { return iequals(n, net); });
}

}  // namespace

void RailConfig::add_supply(const std::string& name) {
    if (is_supply(name)) return;
    const std::string l = lower(name);
    if (l.find("vdd") != std::string::npos || l.find("vcc") != std::string::npos || l.find("vpp") != std::string::npos) {
        high_rails.push_back(name);
    } else {
        low_rails.push_back(name);
    }
}

bool RailConfig::is_high(std::string_view net) const { return contains_name(high_rails, net); }
bool RailConfig::is_low(std::string_view net) const { return contains_name(low_rails, net); }
bool RailConfig::is_signal_port(std::string_view net) const { return contains_name(signal_ports, net); }

RailConfig effective_rails(const CircuitNetlist& netlist, const RailConfig& rails) {
    RailConfig out = rails;
    for (const auto& pin : netlist.pins) {
        if (pin.direction == 'P') {
            if (!out.is_supply(pin.net)) out.high_rails.push_back(pin.net);
        } else if (pin.direction == 'G') {
            if (!out.is_supply(pin.net)) out.low_rails.push_back(pin.net);
        } else if (!out.is_signal_port(pin.net)) {
            out.signal_ports.push_back(pin.net);
        }
    }
    return out;
}

CircuitNetlist annotate_nets(const CircuitNetlist& netlist, const RailConfig& rails) {
    const RailConfig effective = effective_rails(netlist, rails);
    CircuitNetlist out = netlist;
    bool any_supply = false;
    for (auto& net : out.nets) {
        if (effective.is_supply(net.name)) {
            net.role = NetRole::SupplyPort;
            any_supply = true;
        } else if (effective.is_signal_port(net.name)) {
            net.role = NetRole::SignalPort;
        } else {
            net.role = NetRole::InternalNet;
        }
    }
    if (!any_supply) {
        throw Error(ErrorCode::MissingSupply, "no net of '" + netlist.name + "' matches a supply rail name");
    }
    return out;
}

// ---------------------------------------------------------------------------
// Serialization

std::string serialize_netlist(const CircuitNetlist& netlist) {
    std::ostringstream out;
    out << ".title " << netlist.name << "\n";
    if (!netlist.pins.empty()) {
        out << "*.PININFO";
        for (const auto& pin : netlist.pins) out << " " << pin.net << ":" << pin.direction;
        out << "\n";
    }
    for (const auto& d : netlist.devices) {
        out << d.name;
        for (const auto& t : d.terminals) out << " " << t.net;
        std::map<std::string, double> rest = d.params;
        switch (d.kind) {
        case DeviceKind::MosN:
        case DeviceKind::MosP:
            out << " " << d.model;
            break;
        case DeviceKind::Resistor:
        case DeviceKind::Capacitor:
        case DeviceKind::Inductor: {
            const std::string key = d.kind == DeviceKind::Resistor ? "R" : d.kind == DeviceKind::Capacitor ? "C" : "L";
            out << " " << format_spice_value(rest.at(key));
            rest.erase(key);
            break;
        }
        case DeviceKind::VSource:
        case DeviceKind::ISource:
            out << " DC " << format_spice_value(rest.count("DC") ? rest.at("DC") : 0.0);
            rest.erase("DC");
            if (auto ac = rest.find("AC"); ac != rest.end()) {
                out << " AC " << format_spice_value(ac->second);
                rest.erase(ac);
            }
            break;
        }
        for (const auto& [key, value] : rest) out << " " << key << "=" << format_spice_value(value);
        out << "\n";
    }
    out << ".end\n";
    return out.str();
}

}  // namespace heart
