#pragma once

#include <cstdint>

#include "davide/cluster.hpp"

namespace davide::powercap {

/* Node-local power actuation. The knob abstracts the DVFS/RAPL operating
 * point: power responds as knob^alpha, application progress as knob^beta.
 * With alpha > beta, shedding power costs proportionally less performance,
 * which is what makes capping worthwhile. */

struct NodePowerModel {
    double p_idle_w = 400;
    double p_max_w = 2000;
    double alpha = 3;     // power exponent
    double beta = 1;      // performance exponent
    double knob_min = 0.1;  // in (0, 1]

    void validate() const;
};

/* Draw at a given operating point:
 *   P = p_idle + (p_max - p_idle) * utilization * knob^alpha
 * utilization in [0, 1]; demand beyond the envelope saturates at p_max. */
double node_power(const NodePowerModel& model, double knob, double utilization);

// Application progress per wall-clock second: knob^beta.
double work_rate(const NodePowerModel& model, double knob);

/* Discrete PI loop, one step per control period. The error is normalized by
 * the dynamic range so gains are machine-independent. The integral freezes
 * while the knob is pinned at a bound (anti-windup). */
struct ControllerState {
    double set_point_w = 0;   // >= p_idle
    double knob = 1.0;
    double integral = 0;      // normalized error-seconds
    double kp = 0.5;
    double ki = 0.2;
};

ControllerState step_controller(const NodePowerModel& model, const ControllerState& state,
                                double measured_w, double dt_s);

/* Sleep/off gating for idle hardware. Transitioning a component OFF while
 * its node is allocated is rejected. Returns the node's new effective idle
 * draw. */
double set_component_state(cluster::NodeSpec& node, size_t component_index,
                           cluster::ComponentState state, bool node_allocated = false);

}  // namespace davide::powercap
