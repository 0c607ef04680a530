#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "davide/accounting.hpp"
#include "davide/config.hpp"
#include "davide/predictor.hpp"
#include "davide/workload.hpp"

namespace davide::sim {

/* Discrete-time engine, one-second ticks. Each tick: submissions and
 * completions feed the dispatcher, per-node power is integrated in closed
 * form (block means over the tick, exact for piecewise-constant draw),
 * quantized samples flow over the bus to the accounting and capping agents,
 * and PI controllers track any active cap directives.
 *
 * Job starts land on tick boundaries; completions land wherever the work
 * integral finishes, at nanosecond resolution. Identical inputs and seed
 * reproduce every output byte. */

struct JobOutcome {
    std::string job_id;
    std::string user;
    std::string app_tag;
    int nodes = 0;
    std::int64_t submit_ns = 0;
    std::int64_t start_ns = -1;  // -1: never started (rejected)
    std::int64_t end_ns = -1;
    double predicted_w = 0;
    std::string tier;            // prediction tier that priced the job
    double mean_power_w = 0;     // measured whole-allocation mean
    double energy_j = 0;
    bool rejected = false;
    bool backfilled = false;

    double wait_s() const { return start_ns < 0 ? 0 : static_cast<double>(start_ns - submit_ns) * 1e-9; }
};

struct TimelinePoint {
    std::int64_t t_s = 0;
    double predicted_w = 0;  // dispatcher load estimate during [t, t+1)
    double measured_w = 0;   // sum of published node samples
};

struct DecisionRow {
    std::int64_t time_ns = 0;
    std::string event;    // submit|reject|start|backfill|end|reserve|cap|lift
    std::string subject;  // job id, or node id for cap/lift
    int nodes = 0;
    double predicted_w = 0;           // prediction, or cap watts for cap/lift
    std::int64_t reserved_start_ns = -1;
};

struct SimReport {
    std::vector<JobOutcome> jobs;      // workload order
    std::vector<TimelinePoint> timeline;
    std::vector<DecisionRow> decisions;
    accounting::EnergyLedger ledger;
    std::int64_t makespan_s = 0;
    std::int64_t violation_seconds = 0;  // ticks with measured above the cap
    double max_overshoot_w = 0;
    std::int64_t reactive_directive_count = 0;  // caps issued (lifts excluded)
    double system_cap_w = 0;
    std::uint64_t seed = 0;

    // Populated only when SimOptions.record_streams is set.
    std::optional<accounting::RunRecord> record;
    // Populated only when SimOptions.record_bus is set ("<topic> <payload>").
    std::vector<std::string> bus_log;
};

struct SimOptions {
    bool oracle_predictor = false;  // predicted := true mean, margin ignored
    std::optional<predictor::PowerModel> model;  // default: default-only model
    bool record_streams = false;
    bool record_bus = false;
};

SimReport run(const config::RunConfig& cfg, const workload::Workload& w, std::uint64_t seed,
              const SimOptions& opts = {});

}  // namespace davide::sim
