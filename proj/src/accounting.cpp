#include "davide/accounting.hpp"

#include <algorithm>

#include "davide/errors.hpp"

namespace davide::accounting {

namespace {

std::int64_t floor_to(std::int64_t t, std::int64_t period) {
    std::int64_t q = t / period;
    if (t % period != 0 && t < 0) --q;
    return q * period;
}

std::int64_t ceil_to(std::int64_t t, std::int64_t period) {
    std::int64_t f = floor_to(t, period);
    return f == t ? t : f + period;
}

void check_uniform(std::span<const telemetry::PowerSample> samples, std::int64_t period_ns) {
    for (size_t i = 1; i < samples.size(); ++i) {
        if (samples[i].timestamp_ns != samples[i - 1].timestamp_ns + period_ns)
            throw DomainError("sample stream not uniform at timestamp " +
                              std::to_string(samples[i].timestamp_ns) + " (expected " +
                              std::to_string(samples[i - 1].timestamp_ns + period_ns) + ")");
    }
}

// Integer microwatt sum over the snapped window; shared by all entry points.
std::int64_t window_sum_uw(std::span<const telemetry::PowerSample> samples, std::int64_t period_ns,
                           std::int64_t t0_ns, std::int64_t t1_ns, bool check_stream = true) {
    if (period_ns <= 0) throw DomainError("sample period must be > 0");
    if (t1_ns < t0_ns) throw DomainError("window end precedes start");
    if (check_stream) check_uniform(samples, period_ns);
    const std::int64_t a = floor_to(t0_ns, period_ns);
    const std::int64_t b = ceil_to(t1_ns, period_ns);
    if (a == b) return 0;
    if (samples.empty()) throw DomainError("window not covered by stream (stream empty)");
    const std::int64_t s0 = samples.front().timestamp_ns;
    const std::int64_t s1 = samples.back().timestamp_ns + period_ns;
    if (a < s0 || b > s1)
        throw DomainError("window [" + std::to_string(a) + ", " + std::to_string(b) +
                          ") not covered by stream [" + std::to_string(s0) + ", " + std::to_string(s1) + ")");
    const size_t first = static_cast<size_t>((a - s0) / period_ns);
    const size_t count = static_cast<size_t>((b - a) / period_ns);
    std::int64_t sum = 0;
    for (size_t i = first; i < first + count; ++i) {
        if (samples[i].power_uw < 0) throw DomainError("negative power in stream");
        sum += samples[i].power_uw;
    }
    return sum;
}

double to_joules(std::int64_t sum_uw, std::int64_t period_ns) {
    // uW*s / 1e6 = J. Division is correctly rounded, so the result is exact
    // whenever the quotient is representable; quantized samples sit on a 1 W
    // grid, making every pipeline figure a whole number of joules per second.
    return (static_cast<double>(sum_uw) / 1e6) * (static_cast<double>(period_ns) / 1e9);
}

}  // namespace

double integrate(std::span<const telemetry::PowerSample> samples, std::int64_t period_ns,
                 std::int64_t t0_ns, std::int64_t t1_ns) {
    return to_joules(window_sum_uw(samples, period_ns, t0_ns, t1_ns), period_ns);
}

double job_energy(const std::string& job_id, std::span<const AllocationWindow> allocations,
                  const std::map<std::string, std::vector<telemetry::PowerSample>>& node_streams,
                  std::int64_t period_ns) {
    std::int64_t sum = 0;
    for (const auto& w : allocations) {
        if (w.job_id != job_id) continue;
        auto it = node_streams.find(w.node_id);
        if (it == node_streams.end())
            throw DomainError("no stream for node '" + w.node_id + "' referenced by job '" + job_id + "'");
        sum += window_sum_uw(it->second, period_ns, w.start_ns, w.end_ns);
    }
    return to_joules(sum, period_ns);
}

EnergyLedger close_ledger(const RunRecord& run) {
    if (run.period_ns <= 0) throw DomainError("sample period must be > 0");

    // Snapped windows grouped per node, then checked for overlap.
    std::map<std::string, std::vector<AllocationWindow>> per_node;
    for (const auto& w : run.allocations) {
        if (w.end_ns < w.start_ns) throw DomainError("allocation window for job '" + w.job_id + "' is inverted");
        AllocationWindow snapped = w;
        snapped.start_ns = floor_to(w.start_ns, run.period_ns);
        snapped.end_ns = ceil_to(w.end_ns, run.period_ns);
        if (snapped.start_ns < run.t0_ns || snapped.end_ns > run.t1_ns)
            throw DomainError("allocation for job '" + w.job_id + "' falls outside the run span");
        per_node[w.node_id].push_back(std::move(snapped));
    }
    for (auto& [node, windows] : per_node) {
        std::sort(windows.begin(), windows.end(),
                  [](const auto& a, const auto& b) { return a.start_ns < b.start_ns; });
        for (size_t i = 1; i < windows.size(); ++i) {
            if (windows[i].start_ns < windows[i - 1].end_ns)
                throw DomainError("jobs '" + windows[i - 1].job_id + "' and '" + windows[i].job_id +
                                  "' double-attribute node '" + node + "'");
        }
    }

    EnergyLedger ledger;
    std::map<std::string, std::int64_t> job_sums;
    std::int64_t total_sum = 0, job_total_sum = 0;

    for (const auto& [node, stream] : run.node_streams) {
        check_uniform(stream, run.period_ns);
        total_sum += window_sum_uw(stream, run.period_ns, run.t0_ns, run.t1_ns, false);
        auto it = per_node.find(node);
        if (it == per_node.end()) continue;
        for (const auto& w : it->second) {
            std::int64_t s = window_sum_uw(stream, run.period_ns, w.start_ns, w.end_ns, false);
            job_sums[w.job_id] += s;
            job_total_sum += s;
        }
        per_node.erase(it);
    }
    if (!per_node.empty())
        throw DomainError("no stream for node '" + per_node.begin()->first + "'");

    for (const auto& [job, sum] : job_sums) {
        ledger.per_job_j[job] = to_joules(sum, run.period_ns);
        auto user = run.job_users.find(job);
        if (user == run.job_users.end()) throw DomainError("job '" + job + "' has no user mapping");
        ledger.per_user_j[user->second] += to_joules(sum, run.period_ns);
    }
    ledger.total_j = to_joules(total_sum, run.period_ns);
    ledger.idle_j = to_joules(total_sum - job_total_sum, run.period_ns);
    return ledger;
}

}  // namespace davide::accounting
