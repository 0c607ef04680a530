#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "davide/predictor.hpp"

namespace davide::workload {

/* Job streams for the run engine, either synthesized or mapped from
 * Standard Workload Format traces. */

struct PowerPhase {
    double duration_s = 0;    // in nominal (work) seconds; stretches under capping
    double per_node_w = 0;
};

struct Job {
    predictor::JobRequest request;
    std::int64_t true_runtime_s = 0;   // at full speed
    double true_per_node_w = 0;        // work-weighted mean draw per node
    std::vector<PowerPhase> phases;    // empty: constant at true_per_node_w
};

struct Workload {
    std::vector<Job> jobs;  // non-decreasing submit times
};

struct SwfConfig {
    int cores_per_node = 16;   // processor counts map to ceil(procs / cores)
    // Traces carry no power; draw a per-(user, app) figure on the 1 W grid.
    double power_min_w = 800;
    double power_max_w = 2000;
};

/* SWF: ';' comments, 18 whitespace-separated fields per job. Used here:
 * 1 job id, 2 submit s, 4 runtime s, 8 requested processors, 9 requested
 * time s, 12 user id, 14 application number ("-1" becomes "unknown").
 * A 19th field, when present, is the measured per-node power in watts.
 * Jobs with non-positive runtime are skipped with a warning; requested
 * walltimes are raised to at least the runtime. */
Workload parse_swf(const std::string& text, const SwfConfig& config,
                   std::vector<std::string>* warnings = nullptr);

struct SynthSpec {
    std::int64_t n_jobs = 100;
    double arrival_rate_hz = 0.2;      // exponential interarrivals
    std::int64_t runtime_min_s = 10;
    std::int64_t runtime_max_s = 120;
    int nodes_min = 1;
    int nodes_max = 4;
    double power_min_w = 800;          // per node, drawn on the 1 W grid
    double power_max_w = 2000;
    int n_users = 8;
    int n_apps = 4;
    bool power_by_key = false;         // power a pure function of (user, app)
    int phases = 0;                    // > 1 splits each job into power phases
    double walltime_slack_max = 2.0;   // request = runtime * U[1, slack]
};

/* Deterministic synthesis from (spec, seed). Every random purpose draws
 * from its own substream, so e.g. changing the power range never perturbs
 * arrival times. */
Workload generate_workload(const SynthSpec& spec, std::uint64_t seed);

/* Structural checks: sorted submits, positive runtimes, sane phase sums.
 * Whether a job fits the machine is the dispatcher's call (it rejects
 * impossible requests at submit), not a workload property. */
void validate_workload(const Workload& w);

}  // namespace davide::workload
