#include "davide/powercap.hpp"

#include <cmath>
#include <string>

#include "davide/errors.hpp"

namespace davide::powercap {

void NodePowerModel::validate() const {
    if (p_idle_w < 0) throw DomainError("idle power must be >= 0");
    if (p_max_w <= p_idle_w) throw DomainError("max power must exceed idle power");
    if (alpha <= 0 || beta <= 0) throw DomainError("alpha and beta must be > 0");
    if (alpha < beta) throw DomainError("alpha must be >= beta (capping must pay off)");
    if (knob_min <= 0 || knob_min > 1) throw DomainError("knob_min must be in (0, 1]");
}

namespace {

void check_knob(const NodePowerModel& model, double knob) {
    if (knob < model.knob_min || knob > 1.0)
        throw DomainError("knob " + std::to_string(knob) + " outside [" +
                          std::to_string(model.knob_min) + ", 1]");
}

}  // namespace

double node_power(const NodePowerModel& model, double knob, double utilization) {
    model.validate();
    check_knob(model, knob);
    if (utilization < 0) throw DomainError("utilization must be >= 0");
    if (utilization > 1) utilization = 1;  // demand beyond envelope saturates
    return model.p_idle_w + (model.p_max_w - model.p_idle_w) * utilization * std::pow(knob, model.alpha);
}

double work_rate(const NodePowerModel& model, double knob) {
    model.validate();
    check_knob(model, knob);
    return std::pow(knob, model.beta);
}

ControllerState step_controller(const NodePowerModel& model, const ControllerState& state,
                                double measured_w, double dt_s) {
    model.validate();
    if (dt_s <= 0) throw DomainError("control period must be > 0");
    if (measured_w < 0) throw DomainError("measured power must be >= 0");
    if (state.set_point_w < model.p_idle_w) throw DomainError("set point below idle power");

    const double range = model.p_max_w - model.p_idle_w;
    const double error = (state.set_point_w - measured_w) / range;

    ControllerState next = state;
    const double integral_candidate = state.integral + error * dt_s;
    const double unclamped = state.knob + state.kp * error + state.ki * integral_candidate;

    if (unclamped > 1.0) {
        next.knob = 1.0;
        next.integral = error > 0 ? state.integral : integral_candidate;  // freeze while pinned
    } else if (unclamped < model.knob_min) {
        next.knob = model.knob_min;
        next.integral = error < 0 ? state.integral : integral_candidate;
    } else {
        next.knob = unclamped;
        next.integral = integral_candidate;
    }
    return next;
}

double set_component_state(cluster::NodeSpec& node, size_t component_index,
                           cluster::ComponentState state, bool node_allocated) {
    if (component_index >= node.components.size())
        throw DomainError("node '" + node.node_id + "' has no component " + std::to_string(component_index));
    if (state == cluster::ComponentState::OFF && node_allocated)
        throw DomainError("cannot power off a component of allocated node '" + node.node_id + "'");
    node.components[component_index].state = state;
    return cluster::effective_idle_w(node);
}

}  // namespace davide::powercap
