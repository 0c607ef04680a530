#pragma once

#include <filesystem>
#include <string>

#include "davide/sim.hpp"

namespace davide::report {

/* Text renderings of a run. Every column uses a fixed printf format, so the
 * same report renders to the same bytes on every machine and every rerun. */

// job_id,user,app_tag,nodes,submit_s,start_s,end_s,wait_s,predicted_w,tier,
// mean_power_w,energy_j,backfilled,rejected      (unstarted times left empty)
std::string render_jobs_csv(const sim::SimReport& r);

// time_s,predicted_w,measured_w    one row per tick
std::string render_timeline_csv(const sim::SimReport& r);

// time_s,event,subject,nodes,predicted_w,reserved_start_s
std::string render_decisions_csv(const sim::SimReport& r);

// kind,key,energy_j   rows: job,* then user,* then idle and total
std::string render_ledger_csv(const sim::SimReport& r);

// Human-readable roll-up: makespan, cap, violations, waits, energy.
std::string render_summary(const sim::SimReport& r);

/* Writes jobs.csv, timeline.csv, decisions.csv, ledger.csv, summary.txt and,
 * when the run recorded one, bus.log into `dir` (created if missing). All
 * content is rendered before the first byte lands on disk. */
void write_report(const std::filesystem::path& dir, const sim::SimReport& r);

}  // namespace davide::report
