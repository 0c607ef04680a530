#pragma once

#include <string>
#include <vector>

namespace davide::cluster {

/* Static description of the machine: racks, nodes, per-component power
 * figures, and the power envelopes enforced elsewhere.
 *
 * Config format (INI, '#' comments, keys case-sensitive, unknown keys
 * rejected):
 *
 *   [system]
 *   system_cap_w = 90000
 *   rack_cap_w = 32000
 *   psu_efficiency_gain = 0.05
 *
 *   [racks]
 *   rack1
 *
 *   [node node01]
 *   rack = rack1
 *   max_power_w = 2000
 *   idle_power_w = 100      # chassis residual, excludes components
 *   cpu = 2
 *   gpu = 4
 */

enum class ComponentKind { CPU, GPU, MEM, OTHER };
enum class ComponentState { ON, SLEEP, OFF };

struct ComponentSpec {
    ComponentKind kind = ComponentKind::OTHER;
    double idle_power_w = 0;   // draw when ON and otherwise unused
    double sleep_power_w = 0;  // draw in SLEEP; 0 <= sleep <= idle <= max
    double max_power_w = 0;
    ComponentState state = ComponentState::ON;

    bool operator==(const ComponentSpec&) const = default;
};

struct NodeSpec {
    std::string node_id;
    std::string rack_id;
    std::vector<ComponentSpec> components;
    double idle_power_w = 100;   // chassis residual
    double max_power_w = 2000;   // authoritative envelope, > 0

    bool operator==(const NodeSpec&) const = default;
};

struct ClusterSpec {
    std::vector<std::string> racks;
    std::vector<NodeSpec> nodes;
    double rack_cap_w = 32000;
    double system_cap_w = 100000;
    double psu_efficiency_gain = 0.05;  // reporting-only figure, in [0, 1)

    bool operator==(const ClusterSpec&) const = default;
};

// Per-kind defaults applied when the config declares a count (e.g. cpu = 2).
ComponentSpec default_component(ComponentKind kind);

/* Parses the INI text above. Sections other than [system], [racks] and
 * [node *] are ignored here; the run-config loader owns them. Errors carry
 * line numbers; duplicate node ids, undeclared racks, unknown keys and an
 * empty node list are rejected. */
ClusterSpec load_cluster_spec(const std::string& config_text);

// Inverse of load_cluster_spec: load(serialize(s)) == s.
std::string serialize_cluster_spec(const ClusterSpec& spec);

// The stock 45-node machine: 3 racks of 15, 2 kW nodes under a 90 kW cap.
ClusterSpec default_cluster();

// Idle draw with component states applied: chassis + ON idle + SLEEP sleep.
double effective_idle_w(const NodeSpec& node);

/* Worst-case draw of one node. A node with at least one ON component (or
 * none declared) can reach its full envelope; a fully gated node only draws
 * its gated idle power. */
double node_peak_w(const NodeSpec& node);

// Sum of node_peak_w over the whole machine.
double peak_power(const ClusterSpec& spec);

/* Structural power check: for every rack, the sum of member node envelopes
 * must fit under rack_cap_w. Returns one message per violation; empty means
 * valid. system_cap_w may legally be below peak_power (the dispatcher
 * enforces it at runtime). */
std::vector<std::string> validate(const ClusterSpec& spec);

}  // namespace davide::cluster
