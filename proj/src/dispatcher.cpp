#include "davide/dispatcher.hpp"

#include <algorithm>
#include <cmath>

#include "davide/errors.hpp"

namespace davide::dispatcher {

namespace {

constexpr std::int64_t kSecondNs = 1000000000;
// A running job past its requested walltime is assumed to hold its
// resources for at least one more second.
constexpr std::int64_t kOverduePadNs = kSecondNs;

std::int64_t to_mw(double watts) { return std::llround(watts * 1000.0); }

}  // namespace

SchedulerState::SchedulerState(const cluster::ClusterSpec& spec, const SchedOptions& options)
    : options_(options) {
    if (options.backfill_depth < 0) throw DomainError("backfill depth must be >= 0");
    for (const auto& node : spec.nodes) {
        free_nodes_.insert(node.node_id);
        envelopes_[node.node_id] = Envelope{cluster::effective_idle_w(node), node.max_power_w};
    }
    total_nodes_ = static_cast<int>(spec.nodes.size());
    const double cap = options.system_cap_w.value_or(spec.system_cap_w);
    if (cap <= 0) throw DomainError("system cap must be > 0");
    system_cap_mw_ = to_mw(cap);
}

bool SchedulerState::enqueue(const predictor::JobRequest& request, double predicted_w) {
    if (request.nodes_requested < 1) throw DomainError("job must request at least one node");
    if (predicted_w < 0) throw DomainError("predicted power must be >= 0");
    // Jobs that would not fit an empty machine can never start; refuse them
    // up front so the queue head cannot block forever.
    if (request.nodes_requested > total_nodes_) return false;
    if (to_mw(predicted_w) > system_cap_mw_) return false;
    queue_.push_back(Pending{request, to_mw(predicted_w)});
    return true;
}

bool SchedulerState::admit_check(int nodes_requested, double predicted_w) const {
    return static_cast<int>(free_nodes_.size()) >= nodes_requested &&
           predicted_load_mw_ + to_mw(predicted_w) <= system_cap_mw_;
}

std::int64_t SchedulerState::release_time(const Running& job, std::int64_t now_ns) const {
    const std::int64_t requested_end = job.start_ns + job.walltime_req_s * kSecondNs;
    return std::max(requested_end, now_ns + kOverduePadNs);
}

std::optional<Reservation> SchedulerState::compute_reservation(const Pending& head,
                                                               std::int64_t now_ns) const {
    struct Release {
        std::int64_t t;
        int nodes;
        std::int64_t mw;
    };
    std::vector<Release> releases;
    releases.reserve(running_.size());
    for (const auto& [id, job] : running_)
        releases.push_back({release_time(job, now_ns), static_cast<int>(job.nodes.size()), job.predicted_mw});
    std::sort(releases.begin(), releases.end(), [](const Release& a, const Release& b) { return a.t < b.t; });

    std::int64_t free = static_cast<std::int64_t>(free_nodes_.size());
    std::int64_t load = predicted_load_mw_;
    auto feasible = [&] { return free >= head.request.nodes_requested && load + head.predicted_mw <= system_cap_mw_; };
    if (feasible()) return Reservation{head.request.job_id, now_ns, head.request.nodes_requested};
    size_t i = 0;
    while (i < releases.size()) {
        const std::int64_t t = releases[i].t;
        for (; i < releases.size() && releases[i].t == t; ++i) {
            free += releases[i].nodes;
            load -= releases[i].mw;
        }
        if (feasible()) return Reservation{head.request.job_id, t, head.request.nodes_requested};
    }
    // enqueue() guarantees the job fits an empty machine, so the scan above
    // always terminates with a feasible point.
    return std::nullopt;
}

bool SchedulerState::fits_reservation(const Pending& candidate, const Reservation& res,
                                      std::int64_t now_ns) const {
    // Projected state at the reservation instant, counting only jobs whose
    // requested walltime keeps them busy past it.
    std::int64_t busy_nodes = 0, load = 0;
    for (const auto& [id, job] : running_) {
        if (release_time(job, now_ns) > res.start_ns) {
            busy_nodes += static_cast<std::int64_t>(job.nodes.size());
            load += job.predicted_mw;
        }
    }
    const bool candidate_active = now_ns + candidate.request.walltime_req_s * kSecondNs > res.start_ns;
    const std::int64_t free_at_res = total_nodes_ - busy_nodes -
                                     (candidate_active ? candidate.request.nodes_requested : 0);
    const std::int64_t load_at_res = load + (candidate_active ? candidate.predicted_mw : 0);
    // The head must still find its reserved nodes and power headroom.
    const Pending* head = &queue_.front();
    return free_at_res >= res.nodes && load_at_res + head->predicted_mw <= system_cap_mw_;
}

StartDecision SchedulerState::start_job(const Pending& job, std::int64_t now_ns, bool backfilled) {
    Running run;
    run.predicted_mw = job.predicted_mw;
    run.start_ns = now_ns;
    run.walltime_req_s = job.request.walltime_req_s;
    auto it = free_nodes_.begin();
    for (int i = 0; i < job.request.nodes_requested; ++i) {
        run.nodes.push_back(*it);
        node_job_[*it] = job.request.job_id;
        it = free_nodes_.erase(it);
    }
    predicted_load_mw_ += job.predicted_mw;
    StartDecision decision{job.request.job_id, run.nodes,
                           static_cast<double>(job.predicted_mw) / 1000.0, now_ns, backfilled};
    running_.emplace(job.request.job_id, std::move(run));
    return decision;
}

TickResult SchedulerState::schedule_tick(std::int64_t now_ns) {
    TickResult result;
    const std::optional<Reservation> before = reservation_;

    // FCFS: drain the head while it fits.
    while (!queue_.empty() &&
           admit_check(queue_.front().request.nodes_requested,
                       static_cast<double>(queue_.front().predicted_mw) / 1000.0)) {
        result.starts.push_back(start_job(queue_.front(), now_ns, false));
        queue_.pop_front();
    }

    if (queue_.empty()) {
        reservation_ = std::nullopt;
    } else {
        reservation_ = compute_reservation(queue_.front(), now_ns);
        if (options_.backfill && reservation_) {
            // Scan behind the head in queue order; every start re-projects
            // the reservation instant against the updated running set.
            size_t scanned = 0;
            for (size_t i = 1; i < queue_.size() && scanned < static_cast<size_t>(options_.backfill_depth);) {
                ++scanned;
                const Pending& cand = queue_[i];
                if (admit_check(cand.request.nodes_requested,
                                static_cast<double>(cand.predicted_mw) / 1000.0) &&
                    fits_reservation(cand, *reservation_, now_ns)) {
                    result.starts.push_back(start_job(cand, now_ns, true));
                    queue_.erase(queue_.begin() + static_cast<std::ptrdiff_t>(i));
                } else {
                    ++i;
                }
            }
        }
    }

    result.reservation_changed = before != reservation_;
    return result;
}

void SchedulerState::on_job_end(const std::string& job_id, std::int64_t now_ns) {
    (void)now_ns;
    auto it = running_.find(job_id);
    if (it == running_.end()) throw DomainError("job '" + job_id + "' is not running (double end or unknown id)");
    for (const auto& node : it->second.nodes) {
        free_nodes_.insert(node);
        node_job_.erase(node);
    }
    predicted_load_mw_ -= it->second.predicted_mw;
    running_.erase(it);
}

RebalanceResult SchedulerState::reactive_rebalance(const std::map<std::string, double>& node_measured_w,
                                                   std::int64_t now_ns) {
    RebalanceResult result;
    for (const auto& [node, w] : node_measured_w) {
        if (w < 0) throw DomainError("negative measured power for node '" + node + "'");
        result.measured_w += w;
    }

    if (result.measured_w <= system_cap_w()) {
        for (const auto& [node, cap] : active_caps_) {
            (void)cap;
            result.directives.push_back(CapDirective{node, envelopes_.at(node).p_max_w, now_ns});
        }
        active_caps_.clear();
        return result;
    }

    const double deficit = result.measured_w - system_cap_w();
    struct Target {
        std::string node;
        double cur, p_idle, p_max, dyn;
    };
    std::vector<Target> targets;
    double total_dyn = 0;
    for (const auto& [node, job] : node_job_) {
        (void)job;
        auto m = node_measured_w.find(node);
        if (m == node_measured_w.end()) throw DomainError("no measurement for busy node '" + node + "'");
        const Envelope& env = envelopes_.at(node);
        const double dyn = std::max(0.0, m->second - env.p_idle_w);
        targets.push_back(Target{node, m->second, env.p_idle_w, env.p_max_w, dyn});
        total_dyn += dyn;
    }

    if (total_dyn <= 0) {
        result.unshed_w = deficit;  // nothing left to shed: flag, don't cut below idle
        return result;
    }
    if (deficit >= total_dyn) {
        // Even flooring every busy node at idle cannot cover the deficit.
        for (const auto& t : targets) {
            if (t.dyn <= 0) continue;
            result.directives.push_back(CapDirective{t.node, t.p_idle, now_ns});
            active_caps_[t.node] = t.p_idle;
        }
        result.unshed_w = deficit - total_dyn;
        return result;
    }
    // Proportional cut: every share is strictly below the node's dynamic
    // power, so no floor can bind.
    for (const auto& t : targets) {
        if (t.dyn <= 0) continue;
        const double cap = std::min(t.p_max, std::max(t.p_idle, t.cur - deficit * t.dyn / total_dyn));
        result.directives.push_back(CapDirective{t.node, cap, now_ns});
        active_caps_[t.node] = cap;
    }
    return result;
}

}  // namespace davide::dispatcher
