#pragma once

#include <optional>
#include <string>

#include "davide/cluster.hpp"
#include "davide/dispatcher.hpp"
#include "davide/powercap.hpp"
#include "davide/telemetry.hpp"
#include "davide/workload.hpp"

namespace davide::config {

/* One INI file configures a whole run. Cluster sections are owned by
 * load_cluster_spec; the sections below are owned here. Unknown keys and
 * unknown sections are rejected.
 *
 *   [powercap]   kp, ki, alpha, beta, knob_min, control_period_s
 *   [scheduler]  backfill, reactive, backfill_depth, safety_margin,
 *                system_cap_w (optional override of [system])
 *   [telemetry]  adc_bits, full_scale_w, raw_rate_hz, decimation_factor,
 *                noise_amplitude_w, publish_component_channels
 *   [workload]   cores_per_node, n_jobs, arrival_rate_hz, runtime_min_s,
 *                runtime_max_s, nodes_min, nodes_max, power_min_w,
 *                power_max_w, n_users, n_apps, power_by_key, phases,
 *                walltime_slack_max
 */

struct PowercapConfig {
    double kp = 0.5;
    double ki = 0.2;
    double alpha = 3;
    double beta = 1;
    double knob_min = 0.1;
    double control_period_s = 1;
};

struct SchedulerConfig {
    bool backfill = true;
    bool reactive = true;
    int backfill_depth = 64;
    double safety_margin = 1.0;
    std::optional<double> system_cap_w;
};

struct TelemetryConfig {
    telemetry::AdcSpec adc;
    bool publish_component_channels = false;
};

struct RunConfig {
    cluster::ClusterSpec cluster;
    PowercapConfig powercap;
    SchedulerConfig scheduler;
    TelemetryConfig telemetry;
    workload::SynthSpec synth;
    int cores_per_node = 16;
};

RunConfig load_run_config(const std::string& config_text);

}  // namespace davide::config
