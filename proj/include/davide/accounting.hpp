#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "davide/telemetry.hpp"

namespace davide::accounting {

/* Per-job and per-user energy attribution over decimated sample streams.
 *
 * Samples are block means over uniform periods, so rectangle-rule
 * integration is exact. All integration runs over integer microwatt sums;
 * partitioning a stream into jobs plus idle therefore conserves energy
 * exactly, not just to rounding. */

struct AllocationWindow {
    std::string job_id;
    std::string node_id;
    std::int64_t start_ns = 0;
    std::int64_t end_ns = 0;  // half-open [start, end)
};

struct EnergyLedger {
    std::map<std::string, double> per_job_j;
    std::map<std::string, double> per_user_j;
    double idle_j = 0;
    double total_j = 0;
};

/* Joules over [t0, t1). The window is snapped outward to the sample grid
 * (period-aligned, anchored at the epoch), then must be covered by the
 * stream. Sample i accounts for [ts_i, ts_i + period). The stream must be
 * uniformly spaced at period_ns; the first irregular timestamp is reported.
 * An empty window integrates to zero. */
double integrate(std::span<const telemetry::PowerSample> samples, std::int64_t period_ns,
                 std::int64_t t0_ns, std::int64_t t1_ns);

/* Energy of one job: sum of integrate() over its allocation windows against
 * each node's stream. Missing node streams are an error. */
double job_energy(const std::string& job_id, std::span<const AllocationWindow> allocations,
                  const std::map<std::string, std::vector<telemetry::PowerSample>>& node_streams,
                  std::int64_t period_ns);

/* Everything close_ledger needs about a finished run. node_streams hold the
 * "node" channel of every node over [t0, t1). */
struct RunRecord {
    std::int64_t t0_ns = 0;
    std::int64_t t1_ns = 0;
    std::int64_t period_ns = 1000000000;
    std::map<std::string, std::vector<telemetry::PowerSample>> node_streams;
    std::vector<AllocationWindow> allocations;
    std::map<std::string, std::string> job_users;
};

/* Attributes every sample to exactly one of {job, idle}. Windows are
 * snapped outward to sample boundaries before attribution; overlapping
 * windows on a node (after snapping) and windows outside the record span
 * are errors. The microwatt-second sums satisfy total == jobs + idle as
 * integers; with samples on the ADC's 1 W grid the reported joule figures
 * inherit that identity exactly (each conversion is a representable
 * quotient), otherwise it holds to one rounding per figure. */
EnergyLedger close_ledger(const RunRecord& run);

}  // namespace davide::accounting
