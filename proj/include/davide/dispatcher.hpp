#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "davide/cluster.hpp"
#include "davide/predictor.hpp"

namespace davide::dispatcher {

/* Power-aware EASY backfilling. FCFS with one reservation for the blocked
 * queue head; later jobs may jump ahead only if they leave both the
 * reservation's node count and its power headroom intact. Admission adds a
 * predicted-power budget on top of node availability: a job enters only if
 * predicted_load + predicted_w stays within the system cap (inclusive).
 *
 * Predicted load is bookkept in integer milliwatts so additions and removals
 * cancel exactly over any job sequence. */

struct CapDirective {
    std::string node_id;
    double cap_w = 0;  // p_idle <= cap_w <= node p_max
    std::int64_t issued_ns = 0;
};

struct StartDecision {
    std::string job_id;
    std::vector<std::string> nodes;
    double predicted_w = 0;
    std::int64_t start_ns = 0;
    bool backfilled = false;
};

struct Reservation {
    std::string job_id;
    std::int64_t start_ns = 0;
    int nodes = 0;

    bool operator==(const Reservation&) const = default;
};

struct TickResult {
    std::vector<StartDecision> starts;
    bool reservation_changed = false;
};

struct RebalanceResult {
    std::vector<CapDirective> directives;
    double measured_w = 0;
    double unshed_w = 0;  // > 0 only when every busy node is floored at idle
};

struct SchedOptions {
    bool backfill = true;
    int backfill_depth = 64;       // queue positions scanned past the head
    std::optional<double> system_cap_w;  // overrides the cluster figure
};

class SchedulerState {
public:
    SchedulerState(const cluster::ClusterSpec& spec, const SchedOptions& options);

    /* Queues a job with its power prediction. Returns false (never queued)
     * for jobs that could not run even on an empty machine. */
    bool enqueue(const predictor::JobRequest& request, double predicted_w);

    // Node availability plus power budget, both inclusive.
    bool admit_check(int nodes_requested, double predicted_w) const;

    /* Runs the policy at `now`: starts the head while it fits, then computes
     * the head's reservation from requested walltimes and backfills around
     * it. Jobs are scanned in queue order; each start consumes nodes
     * (lowest ids first) and predicted power immediately. */
    TickResult schedule_tick(std::int64_t now_ns);

    // Releases the job's nodes and subtracts its prediction exactly.
    void on_job_end(const std::string& job_id, std::int64_t now_ns);

    /* Reactive shedding against measured node powers (all nodes). When the
     * measured total exceeds the cap, busy nodes receive cap directives
     * proportional to their dynamic power, floored at idle; once the total
     * is back under the cap, active directives are lifted to p_max. */
    RebalanceResult reactive_rebalance(const std::map<std::string, double>& node_measured_w,
                                       std::int64_t now_ns);

    double predicted_load_w() const { return static_cast<double>(predicted_load_mw_) / 1000.0; }
    double system_cap_w() const { return static_cast<double>(system_cap_mw_) / 1000.0; }
    size_t queue_depth() const { return queue_.size(); }
    size_t running_count() const { return running_.size(); }
    size_t free_node_count() const { return free_nodes_.size(); }
    const std::optional<Reservation>& reservation() const { return reservation_; }
    const std::map<std::string, double>& active_caps() const { return active_caps_; }

private:
    struct Pending {
        predictor::JobRequest request;
        std::int64_t predicted_mw = 0;
    };
    struct Running {
        std::vector<std::string> nodes;
        std::int64_t predicted_mw = 0;
        std::int64_t start_ns = 0;
        std::int64_t walltime_req_s = 0;
    };
    struct Envelope {
        double p_idle_w = 0;
        double p_max_w = 0;
    };

    std::int64_t release_time(const Running& job, std::int64_t now_ns) const;
    std::optional<Reservation> compute_reservation(const Pending& head, std::int64_t now_ns) const;
    bool fits_reservation(const Pending& candidate, const Reservation& res, std::int64_t now_ns) const;
    StartDecision start_job(const Pending& job, std::int64_t now_ns, bool backfilled);

    std::deque<Pending> queue_;
    std::map<std::string, Running> running_;
    std::set<std::string> free_nodes_;
    std::map<std::string, Envelope> envelopes_;
    std::map<std::string, std::string> node_job_;
    std::optional<Reservation> reservation_;
    std::map<std::string, double> active_caps_;
    std::int64_t predicted_load_mw_ = 0;
    std::int64_t system_cap_mw_ = 0;
    int total_nodes_ = 0;
    SchedOptions options_;
};

}  // namespace davide::dispatcher
