#include "davide/report.hpp"

#include <algorithm>
#include <cinttypes>
#include <cstdarg>
#include <cstdio>
#include <fstream>
#include <vector>

#include "davide/errors.hpp"

namespace davide::report {

namespace {

void appendf(std::string& out, const char* fmt, ...) {
    char buf[256];
    va_list args;
    va_start(args, fmt);
    const int n = std::vsnprintf(buf, sizeof buf, fmt, args);
    va_end(args);
    out.append(buf, static_cast<size_t>(n));
}

void append_time_s(std::string& out, std::int64_t ns) {
    appendf(out, "%.9f", static_cast<double>(ns) * 1e-9);
}

}  // namespace

std::string render_jobs_csv(const sim::SimReport& r) {
    std::string out =
        "job_id,user,app_tag,nodes,submit_s,start_s,end_s,wait_s,predicted_w,tier,"
        "mean_power_w,energy_j,backfilled,rejected\n";
    for (const auto& j : r.jobs) {
        out += j.job_id + "," + j.user + "," + j.app_tag + ",";
        appendf(out, "%d,", j.nodes);
        append_time_s(out, j.submit_ns);
        out += ",";
        if (j.start_ns >= 0) append_time_s(out, j.start_ns);
        out += ",";
        if (j.end_ns >= 0) append_time_s(out, j.end_ns);
        out += ",";
        if (j.start_ns >= 0) appendf(out, "%.9f", j.wait_s());
        appendf(out, ",%.3f,%s,%.6f,%.6f,%d,%d\n", j.predicted_w, j.tier.c_str(), j.mean_power_w,
                j.energy_j, j.backfilled ? 1 : 0, j.rejected ? 1 : 0);
    }
    return out;
}

std::string render_timeline_csv(const sim::SimReport& r) {
    std::string out = "time_s,predicted_w,measured_w\n";
    for (const auto& p : r.timeline)
        appendf(out, "%" PRId64 ",%.3f,%.6f\n", p.t_s, p.predicted_w, p.measured_w);
    return out;
}

std::string render_decisions_csv(const sim::SimReport& r) {
    std::string out = "time_s,event,subject,nodes,predicted_w,reserved_start_s\n";
    for (const auto& d : r.decisions) {
        append_time_s(out, d.time_ns);
        out += "," + d.event + "," + d.subject + ",";
        appendf(out, "%d,%.3f,", d.nodes, d.predicted_w);
        if (d.reserved_start_ns >= 0) append_time_s(out, d.reserved_start_ns);
        out += "\n";
    }
    return out;
}

std::string render_ledger_csv(const sim::SimReport& r) {
    std::string out = "kind,key,energy_j\n";
    for (const auto& [job, e] : r.ledger.per_job_j) appendf(out, "job,%s,%.6f\n", job.c_str(), e);
    for (const auto& [user, e] : r.ledger.per_user_j) appendf(out, "user,%s,%.6f\n", user.c_str(), e);
    appendf(out, "idle,,%.6f\n", r.ledger.idle_j);
    appendf(out, "total,,%.6f\n", r.ledger.total_j);
    return out;
}

std::string render_summary(const sim::SimReport& r) {
    std::int64_t started = 0, rejected = 0, backfilled = 0;
    double wait_sum = 0, wait_max = 0, peak_w = 0;
    for (const auto& j : r.jobs) {
        if (j.rejected) {
            ++rejected;
            continue;
        }
        if (j.start_ns < 0) continue;
        ++started;
        if (j.backfilled) ++backfilled;
        wait_sum += j.wait_s();
        wait_max = std::max(wait_max, j.wait_s());
    }
    for (const auto& p : r.timeline) peak_w = std::max(peak_w, p.measured_w);

    std::string out;
    appendf(out, "seed                 %" PRIu64 "\n", r.seed);
    appendf(out, "system_cap_w         %.3f\n", r.system_cap_w);
    appendf(out, "makespan_s           %" PRId64 "\n", r.makespan_s);
    appendf(out, "jobs                 %zu\n", r.jobs.size());
    appendf(out, "jobs_started         %" PRId64 "\n", started);
    appendf(out, "jobs_backfilled      %" PRId64 "\n", backfilled);
    appendf(out, "jobs_rejected        %" PRId64 "\n", rejected);
    appendf(out, "avg_wait_s           %.6f\n", started > 0 ? wait_sum / static_cast<double>(started) : 0.0);
    appendf(out, "max_wait_s           %.6f\n", wait_max);
    appendf(out, "peak_measured_w      %.6f\n", peak_w);
    appendf(out, "violation_seconds    %" PRId64 "\n", r.violation_seconds);
    appendf(out, "max_overshoot_w      %.6f\n", r.max_overshoot_w);
    appendf(out, "reactive_directives  %" PRId64 "\n", r.reactive_directive_count);
    appendf(out, "energy_total_j       %.6f\n", r.ledger.total_j);
    appendf(out, "energy_idle_j        %.6f\n", r.ledger.idle_j);
    return out;
}

void write_report(const std::filesystem::path& dir, const sim::SimReport& r) {
    struct Artifact {
        const char* name;
        std::string content;
    };
    std::vector<Artifact> artifacts = {
        {"jobs.csv", render_jobs_csv(r)},       {"timeline.csv", render_timeline_csv(r)},
        {"decisions.csv", render_decisions_csv(r)}, {"ledger.csv", render_ledger_csv(r)},
        {"summary.txt", render_summary(r)},
    };
    if (!r.bus_log.empty()) {
        std::string log;
        for (const auto& line : r.bus_log) log += line + "\n";
        artifacts.push_back({"bus.log", std::move(log)});
    }

    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw DomainError("cannot create report directory " + dir.string() + ": " + ec.message());
    for (const auto& a : artifacts) {
        const auto path = dir / a.name;
        std::ofstream f(path, std::ios::binary | std::ios::trunc);
        if (!f) throw DomainError("cannot open " + path.string() + " for writing");
        f.write(a.content.data(), static_cast<std::streamsize>(a.content.size()));
        if (!f) throw DomainError("short write to " + path.string());
    }
}

}  // namespace davide::report
