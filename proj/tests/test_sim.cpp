#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "davide/accounting.hpp"
#include "davide/report.hpp"
#include "davide/sim.hpp"

using namespace davide;

namespace {

constexpr std::int64_t kSec = 1000000000;

config::RunConfig tiny_cluster(int n_nodes) {
    config::RunConfig cfg;
    cfg.cluster.racks = {"r0"};
    for (int i = 0; i < n_nodes; ++i) {
        cluster::NodeSpec node;
        node.node_id = "n" + std::to_string(i + 1);
        node.rack_id = "r0";
        node.idle_power_w = 400;
        node.max_power_w = 2000;
        cfg.cluster.nodes.push_back(node);
    }
    cfg.cluster.rack_cap_w = n_nodes * 2000.0;
    cfg.cluster.system_cap_w = n_nodes * 2000.0;
    return cfg;
}

workload::Job mk_job(const std::string& id, int nodes, std::int64_t runtime_s, double per_node_w,
                     std::int64_t submit_s = 0, std::int64_t walltime_s = -1) {
    workload::Job j;
    j.request.job_id = id;
    j.request.user = "u1";
    j.request.app_tag = "a1";
    j.request.nodes_requested = nodes;
    j.request.walltime_req_s = walltime_s < 0 ? runtime_s : walltime_s;
    j.request.submit_time_ns = submit_s * kSec;
    j.true_runtime_s = runtime_s;
    j.true_per_node_w = per_node_w;
    return j;
}

int count_events(const sim::SimReport& r, const std::string& event) {
    int n = 0;
    for (const auto& d : r.decisions) n += d.event == event;
    return n;
}

}  // namespace

TEST_CASE("engine: empty workload ends immediately") {
    const auto r = sim::run(tiny_cluster(2), {}, 1);
    CHECK(r.jobs.empty());
    CHECK(r.timeline.empty());
    CHECK(r.makespan_s == 0);
    CHECK(r.ledger.total_j == 0.0);
    CHECK(r.violation_seconds == 0);
}

TEST_CASE("engine: one constant job accounts to the joule") {
    workload::Workload w;
    w.jobs.push_back(mk_job("j1", 1, 10, 1200));
    sim::SimOptions opts;
    opts.oracle_predictor = true;
    const auto r = sim::run(tiny_cluster(2), w, 1, opts);

    REQUIRE(r.jobs.size() == 1);
    const auto& j = r.jobs[0];
    CHECK(j.start_ns == 0);
    CHECK(j.end_ns == 10 * kSec);
    CHECK(j.wait_s() == 0.0);
    CHECK(j.predicted_w == 1200.0);
    CHECK(j.tier == "oracle");
    CHECK(j.energy_j == 12000.0);      // 1200 W for 10 s, exact on the 1 W grid
    CHECK(j.mean_power_w == 1200.0);
    CHECK_FALSE(j.backfilled);
    CHECK_FALSE(j.rejected);

    CHECK(r.makespan_s == 10);
    REQUIRE(r.timeline.size() == 10);
    for (const auto& p : r.timeline) {
        CHECK(p.measured_w == 1600.0);  // busy node 1200 plus idle node 400
        CHECK(p.predicted_w == 1200.0);
    }
    CHECK(r.ledger.total_j == 16000.0);
    CHECK(r.ledger.per_job_j.at("j1") == 12000.0);
    CHECK(r.ledger.per_user_j.at("u1") == 12000.0);
    CHECK(r.ledger.idle_j == 4000.0);
    CHECK(r.violation_seconds == 0);
    CHECK(r.reactive_directive_count == 0);
    CHECK(count_events(r, "submit") == 1);
    CHECK(count_events(r, "start") == 1);
    CHECK(count_events(r, "end") == 1);

    // Pin the report row format off the same run.
    const auto csv = report::render_jobs_csv(r);
    CHECK(csv.find("j1,u1,a1,1,0.000000000,0.000000000,10.000000000,0.000000000,"
                   "1200.000,oracle,1200.000000,12000.000000,0,0\n") != std::string::npos);
}

TEST_CASE("engine: generous walltime does not stretch the run") {
    workload::Workload w;
    w.jobs.push_back(mk_job("j1", 1, 7, 1000, 0, 50));
    const auto r = sim::run(tiny_cluster(1), w, 1, {});
    CHECK(r.jobs[0].end_ns == 7 * kSec);
    CHECK(r.makespan_s == 7);
}

TEST_CASE("engine: rejected jobs are marked and never scheduled") {
    workload::Workload w;
    w.jobs.push_back(mk_job("wide", 3, 10, 1000));  // 3 nodes on a 2 node machine
    w.jobs.push_back(mk_job("ok", 1, 5, 1000));
    sim::SimOptions opts;
    opts.oracle_predictor = true;
    const auto r = sim::run(tiny_cluster(2), w, 1, opts);
    CHECK(r.jobs[0].rejected);
    CHECK(r.jobs[0].start_ns == -1);
    CHECK(r.jobs[0].energy_j == 0.0);
    CHECK_FALSE(r.jobs[1].rejected);
    CHECK(count_events(r, "reject") == 1);
    // The rejected job renders with empty time fields.
    const auto csv = report::render_jobs_csv(r);
    CHECK(csv.find("wide,u1,a1,3,0.000000000,,,,3000.000,oracle") != std::string::npos);
}

TEST_CASE("engine: incremental ledger matches the closed record exactly") {
    for (int phased = 0; phased <= 1; ++phased) {
        workload::SynthSpec spec;
        spec.n_jobs = 40;
        spec.arrival_rate_hz = 0.5;
        spec.runtime_min_s = 5;
        spec.runtime_max_s = 20;
        spec.nodes_min = 1;
        spec.nodes_max = 2;
        spec.phases = phased ? 3 : 0;
        const auto w = workload::generate_workload(spec, 5);

        auto cfg = tiny_cluster(4);
        sim::SimOptions opts;
        opts.record_streams = true;
        const auto r = sim::run(cfg, w, 5, opts);
        REQUIRE(r.record.has_value());

        const auto closed = accounting::close_ledger(*r.record);
        CHECK(closed.total_j == r.ledger.total_j);
        CHECK(closed.idle_j == r.ledger.idle_j);
        REQUIRE(closed.per_job_j.size() == r.ledger.per_job_j.size());
        for (const auto& [job, e] : r.ledger.per_job_j) CHECK(closed.per_job_j.at(job) == e);
        for (const auto& [user, e] : r.ledger.per_user_j) CHECK(closed.per_user_j.at(user) == e);

        // Conservation is an equality: samples live on the 1 W grid.
        double jobs_sum = 0;
        for (const auto& [job, e] : r.ledger.per_job_j) jobs_sum += e;
        CHECK(jobs_sum + r.ledger.idle_j == r.ledger.total_j);

        // Everything ran: the machine out-sizes the workload.
        for (const auto& j : r.jobs) {
            CHECK_FALSE(j.rejected);
            CHECK(j.end_ns > j.start_ns);
        }
    }
}

TEST_CASE("engine: reactive capping dilates work and lifts afterwards") {
    workload::Workload w;
    workload::Job j = mk_job("j1", 1, 10, 1200, 0, 30);
    j.phases = {{5, 800}, {5, 1600}};  // mean 1200 passes a 1300 W admission
    w.jobs.push_back(j);

    auto cfg = tiny_cluster(1);
    cfg.scheduler.system_cap_w = 1300.0;
    sim::SimOptions opts;
    opts.oracle_predictor = true;
    const auto r = sim::run(cfg, w, 1, opts);

    REQUIRE(r.jobs.size() == 1);
    CHECK_FALSE(r.jobs[0].rejected);
    // The hot phase trips the cap: the controller throttles, work stretches.
    CHECK(r.reactive_directive_count >= 1);
    CHECK(r.violation_seconds >= 1);
    CHECK(r.max_overshoot_w == 300.0);  // first hot tick runs uncapped at 1600
    CHECK(r.jobs[0].end_ns > 10 * kSec);
    CHECK(count_events(r, "cap") >= 1);
    CHECK(count_events(r, "lift") >= 1);
    for (const auto& p : r.timeline) CHECK(p.measured_w <= 1600.0);
    // All ten work-seconds were delivered despite the throttling.
    CHECK(r.jobs[0].energy_j > 0);
}

TEST_CASE("engine: backfill shortens waits without touching the head start") {
    workload::Workload w;
    w.jobs.push_back(mk_job("long", 1, 10, 1000));
    w.jobs.push_back(mk_job("head", 2, 10, 1000));
    w.jobs.push_back(mk_job("fill", 1, 5, 1000));
    sim::SimOptions opts;
    opts.oracle_predictor = true;

    auto cfg = tiny_cluster(2);
    const auto with_bf = sim::run(cfg, w, 1, opts);
    CHECK(with_bf.jobs[2].start_ns == 0);
    CHECK(with_bf.jobs[2].backfilled);
    CHECK(with_bf.jobs[1].start_ns == 10 * kSec);
    CHECK(with_bf.makespan_s == 20);
    CHECK(count_events(with_bf, "backfill") == 1);
    CHECK(count_events(with_bf, "reserve") >= 1);

    cfg.scheduler.backfill = false;
    const auto without = sim::run(cfg, w, 1, opts);
    CHECK(without.jobs[1].start_ns == 10 * kSec);  // head unchanged
    CHECK(without.jobs[2].start_ns == 20 * kSec);  // filler now runs last
    CHECK(without.makespan_s == 25);
    CHECK(count_events(without, "backfill") == 0);
}

TEST_CASE("engine: identical inputs reproduce every output byte") {
    workload::SynthSpec spec;
    spec.n_jobs = 30;
    spec.nodes_min = 1;
    spec.nodes_max = 3;
    spec.phases = 2;
    const auto w = workload::generate_workload(spec, 9);
    const auto cfg = tiny_cluster(4);

    const auto a = sim::run(cfg, w, 9, {});
    const auto b = sim::run(cfg, w, 9, {});
    CHECK(report::render_jobs_csv(a) == report::render_jobs_csv(b));
    CHECK(report::render_timeline_csv(a) == report::render_timeline_csv(b));
    CHECK(report::render_decisions_csv(a) == report::render_decisions_csv(b));
    CHECK(report::render_ledger_csv(a) == report::render_ledger_csv(b));
    CHECK(report::render_summary(a) == report::render_summary(b));
}

TEST_CASE("engine: default model prices by envelope times margin") {
    workload::Workload w;
    w.jobs.push_back(mk_job("j1", 2, 5, 900));
    auto cfg = tiny_cluster(3);
    cfg.scheduler.safety_margin = 1.1;
    const auto r = sim::run(cfg, w, 1, {});
    CHECK(r.jobs[0].predicted_w == (2000.0 * 2) * 1.1);
    CHECK(r.jobs[0].tier == "default");
}

TEST_CASE("engine: component channels publish alongside the node stream") {
    auto cfg = tiny_cluster(1);
    auto& node = cfg.cluster.nodes[0];
    node.idle_power_w = 100;
    node.components = {
        {cluster::ComponentKind::CPU, 150, 30, 900, cluster::ComponentState::ON},
        {cluster::ComponentKind::GPU, 150, 20, 1000, cluster::ComponentState::ON},
    };
    cfg.telemetry.publish_component_channels = true;

    workload::Workload w;
    w.jobs.push_back(mk_job("j1", 1, 5, 1200));
    sim::SimOptions opts;
    opts.oracle_predictor = true;
    opts.record_bus = true;
    const auto r = sim::run(cfg, w, 1, opts);

    int node_lines = 0, cpu_lines = 0, gpu_lines = 0, energy_lines = 0;
    for (const auto& line : r.bus_log) {
        node_lines += line.find("/node/power ") != std::string::npos;
        cpu_lines += line.find("/cpu0/power ") != std::string::npos;
        gpu_lines += line.find("/gpu0/power ") != std::string::npos;
        energy_lines += line.find("davide/jobs/j1/energy ") != std::string::npos;
    }
    CHECK(node_lines == r.makespan_s);
    CHECK(cpu_lines == r.makespan_s);
    CHECK(gpu_lines == r.makespan_s);
    CHECK(energy_lines == 1);
}
