#include "davide/cluster.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <set>

#include "davide/errors.hpp"
#include "davide/ini.hpp"

namespace davide::cluster {

namespace {

const char* kind_key(ComponentKind k) {
    switch (k) {
        case ComponentKind::CPU: return "cpu";
        case ComponentKind::GPU: return "gpu";
        case ComponentKind::MEM: return "mem";
        case ComponentKind::OTHER: return "other";
    }
    return "other";
}

// Sections owned by other loaders; anything else under an unknown name is an error.
bool foreign_section(const std::string& name) {
    return name == "powercap" || name == "scheduler" || name == "workload" || name == "telemetry";
}

void check_id(const std::string& id, int line) {
    if (id.empty()) throw ParseError("empty identifier", line);
    for (char c : id) {
        bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
                  c == '_' || c == '-' || c == '.';
        if (!ok) throw ParseError("identifier '" + id + "' has illegal character '" + std::string(1, c) + "'", line);
    }
}

std::string fmt_w(double w) {
    char buf[64];
    if (w == static_cast<long long>(w))
        std::snprintf(buf, sizeof buf, "%lld", static_cast<long long>(w));
    else
        std::snprintf(buf, sizeof buf, "%.6g", w);
    return buf;
}

}  // namespace

ComponentSpec default_component(ComponentKind kind) {
    switch (kind) {
        case ComponentKind::CPU: return {kind, 50, 10, 300, ComponentState::ON};
        case ComponentKind::GPU: return {kind, 50, 10, 300, ComponentState::ON};
        case ComponentKind::MEM: return {kind, 25, 5, 60, ComponentState::ON};
        case ComponentKind::OTHER: return {kind, 10, 2, 30, ComponentState::ON};
    }
    return {};
}

ClusterSpec load_cluster_spec(const std::string& config_text) {
    ini::Doc doc = ini::parse(config_text);
    ClusterSpec spec;
    spec.racks.clear();

    std::set<std::string> rack_set;
    std::set<std::string> node_ids;
    bool saw_node_section = false;

    for (const auto& sec : doc.sections) {
        if (sec.name == "system") {
            for (const auto& e : sec.entries) {
                if (e.key == "system_cap_w") spec.system_cap_w = ini::to_double(e);
                else if (e.key == "rack_cap_w") spec.rack_cap_w = ini::to_double(e);
                else if (e.key == "psu_efficiency_gain") spec.psu_efficiency_gain = ini::to_double(e);
                else throw ParseError("unknown key '" + e.key + "' in [system]", e.line);
            }
            if (spec.system_cap_w <= 0) throw ParseError("system_cap_w must be > 0", sec.line);
            if (spec.rack_cap_w <= 0) throw ParseError("rack_cap_w must be > 0", sec.line);
            if (spec.psu_efficiency_gain < 0 || spec.psu_efficiency_gain >= 1)
                throw ParseError("psu_efficiency_gain must be in [0, 1)", sec.line);
            if (!sec.bare.empty()) throw ParseError("stray value in [system]", sec.bare.front().second);
        } else if (sec.name == "racks") {
            for (const auto& e : sec.entries)
                throw ParseError("unexpected key '" + e.key + "' in [racks] (one rack id per line)", e.line);
            for (const auto& [id, line] : sec.bare) {
                check_id(id, line);
                if (!rack_set.insert(id).second) throw ParseError("duplicate rack '" + id + "'", line);
                spec.racks.push_back(id);
            }
        } else if (sec.name.rfind("node ", 0) == 0) {
            saw_node_section = true;
            NodeSpec node;
            node.node_id = sec.name.substr(5);
            check_id(node.node_id, sec.line);
            if (!node_ids.insert(node.node_id).second)
                throw ParseError("duplicate node '" + node.node_id + "'", sec.line);
            if (!sec.bare.empty()) throw ParseError("stray value in [node]", sec.bare.front().second);

            bool any_component_key = false;
            for (const auto& e : sec.entries) {
                if (e.key == "rack") {
                    node.rack_id = e.value;
                } else if (e.key == "max_power_w") {
                    node.max_power_w = ini::to_double(e);
                    if (node.max_power_w <= 0) throw ParseError("max_power_w must be > 0", e.line);
                } else if (e.key == "idle_power_w") {
                    node.idle_power_w = ini::to_double(e);
                    if (node.idle_power_w < 0) throw ParseError("idle_power_w must be >= 0", e.line);
                } else if (e.key == "cpu" || e.key == "gpu" || e.key == "mem" || e.key == "other") {
                    any_component_key = true;
                    long long n = ini::to_int(e);
                    if (n < 0) throw ParseError("component count must be >= 0", e.line);
                    ComponentKind kind = e.key == "cpu"   ? ComponentKind::CPU
                                         : e.key == "gpu" ? ComponentKind::GPU
                                         : e.key == "mem" ? ComponentKind::MEM
                                                          : ComponentKind::OTHER;
                    for (long long i = 0; i < n; ++i) node.components.push_back(default_component(kind));
                } else {
                    throw ParseError("unknown key '" + e.key + "' in [node " + node.node_id + "]", e.line);
                }
            }
            // Stock composition when the config says nothing about components.
            if (!any_component_key) {
                for (int i = 0; i < 2; ++i) node.components.push_back(default_component(ComponentKind::CPU));
                for (int i = 0; i < 4; ++i) node.components.push_back(default_component(ComponentKind::GPU));
            }
            if (node.rack_id.empty()) throw ParseError("[node " + node.node_id + "] missing 'rack'", sec.line);
            spec.nodes.push_back(std::move(node));
        } else if (!foreign_section(sec.name)) {
            throw ParseError("unknown section [" + sec.name + "]", sec.line);
        }
    }

    if (!saw_node_section || spec.nodes.empty()) throw ParseError("no nodes declared");
    for (const auto& n : spec.nodes)
        if (!rack_set.count(n.rack_id))
            throw ParseError("node '" + n.node_id + "' references undeclared rack '" + n.rack_id + "'");
    return spec;
}

std::string serialize_cluster_spec(const ClusterSpec& spec) {
    std::string out;
    out += "[system]\n";
    out += "system_cap_w = " + fmt_w(spec.system_cap_w) + "\n";
    out += "rack_cap_w = " + fmt_w(spec.rack_cap_w) + "\n";
    out += "psu_efficiency_gain = " + fmt_w(spec.psu_efficiency_gain) + "\n\n";
    out += "[racks]\n";
    for (const auto& r : spec.racks) out += r + "\n";
    for (const auto& n : spec.nodes) {
        out += "\n[node " + n.node_id + "]\n";
        out += "rack = " + n.rack_id + "\n";
        out += "max_power_w = " + fmt_w(n.max_power_w) + "\n";
        out += "idle_power_w = " + fmt_w(n.idle_power_w) + "\n";
        std::map<std::string, int> counts;
        for (const auto& c : n.components) ++counts[kind_key(c.kind)];
        for (const char* k : {"cpu", "gpu", "mem", "other"})
            if (counts.count(k)) out += std::string(k) + " = " + std::to_string(counts[k]) + "\n";
    }
    return out;
}

ClusterSpec default_cluster() {
    ClusterSpec spec;
    spec.system_cap_w = 90000;
    spec.rack_cap_w = 32000;
    spec.psu_efficiency_gain = 0.05;
    for (int r = 1; r <= 3; ++r) spec.racks.push_back("rack" + std::to_string(r));
    for (int i = 1; i <= 45; ++i) {
        NodeSpec node;
        char id[16];
        std::snprintf(id, sizeof id, "node%02d", i);
        node.node_id = id;
        node.rack_id = "rack" + std::to_string((i - 1) / 15 + 1);
        node.max_power_w = 2000;
        node.idle_power_w = 100;
        for (int c = 0; c < 2; ++c) node.components.push_back(default_component(ComponentKind::CPU));
        for (int c = 0; c < 4; ++c) node.components.push_back(default_component(ComponentKind::GPU));
        spec.nodes.push_back(std::move(node));
    }
    return spec;
}

double effective_idle_w(const NodeSpec& node) {
    double w = node.idle_power_w;
    for (const auto& c : node.components) {
        switch (c.state) {
            case ComponentState::ON: w += c.idle_power_w; break;
            case ComponentState::SLEEP: w += c.sleep_power_w; break;
            case ComponentState::OFF: break;
        }
    }
    return w;
}

double node_peak_w(const NodeSpec& node) {
    bool any_on = node.components.empty();
    for (const auto& c : node.components)
        if (c.state == ComponentState::ON) any_on = true;
    return any_on ? node.max_power_w : effective_idle_w(node);
}

double peak_power(const ClusterSpec& spec) {
    double sum = 0;
    for (const auto& n : spec.nodes) sum += node_peak_w(n);
    return sum;
}

std::vector<std::string> validate(const ClusterSpec& spec) {
    std::vector<std::string> violations;
    std::map<std::string, double> rack_sum;
    for (const auto& n : spec.nodes) rack_sum[n.rack_id] += n.max_power_w;
    for (const auto& r : spec.racks) {
        auto it = rack_sum.find(r);
        if (it != rack_sum.end() && it->second > spec.rack_cap_w) {
            violations.push_back("rack '" + r + "' node envelopes sum to " + fmt_w(it->second) +
                                 " W, above rack cap " + fmt_w(spec.rack_cap_w) + " W");
        }
    }
    return violations;
}

}  // namespace davide::cluster
