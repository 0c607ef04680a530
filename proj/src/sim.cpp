#include "davide/sim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>

#include "davide/bus.hpp"
#include "davide/dispatcher.hpp"
#include "davide/errors.hpp"
#include "davide/powercap.hpp"

namespace davide::sim {

namespace {

constexpr std::int64_t kSecondNs = 1000000000;

struct NodeRt {
    std::string id;
    std::string rack;
    powercap::NodePowerModel model;
    bus::Topic topic;
    std::vector<std::pair<std::string, bus::Topic>> component_topics;
    const cluster::NodeSpec* spec = nullptr;

    double knob = 1.0;
    bool capped = false;
    powercap::ControllerState ctrl;

    // Closed-form integration of the tick in flight: draw is piecewise
    // constant, segments split wherever a job event lands.
    double seg_power_w = 0;
    std::int64_t seg_start_ns = 0;
    double acc_wns = 0;

    std::int64_t last_sample_uw = 0;
    std::int64_t stream_sum_uw = 0;
    int job_idx = -1;   // current occupant
    int attr_idx = -1;  // job charged for the tick in flight
};

struct JobRt {
    std::vector<int> nodes;
    std::int64_t start_ns = 0;
    double total_work_s = 0;
    double progress_s = 0;
    double rate = 1.0;  // fixed at each tick open
    size_t phase_idx = 0;
    std::vector<workload::PowerPhase> phases;
    std::int64_t sum_uw = 0;
    bool done = false;
};

double phase_boundary(const JobRt& job) {
    double b = 0;
    for (size_t i = 0; i <= job.phase_idx; ++i) b += job.phases[i].duration_s;
    return b;
}

double utilization(const powercap::NodePowerModel& m, double per_node_w) {
    return std::clamp((per_node_w - m.p_idle_w) / (m.p_max_w - m.p_idle_w), 0.0, 1.0);
}

}  // namespace

SimReport run(const config::RunConfig& cfg, const workload::Workload& w, std::uint64_t seed,
              const SimOptions& opts) {
    // Structural gates first: a run never starts on an invalid machine.
    if (auto violations = cluster::validate(cfg.cluster); !violations.empty())
        throw DomainError("invalid cluster: " + violations.front());
    workload::validate_workload(w);
    cfg.telemetry.adc.validate();
    const double period_s = cfg.powercap.control_period_s;
    if (period_s != std::floor(period_s) || period_s < 1)
        throw DomainError("engine requires a whole-second control period");
    const std::int64_t ctrl_every = static_cast<std::int64_t>(period_s);

    const predictor::PowerModel model =
        opts.model ? *opts.model : predictor::train({}, 2000.0, cfg.scheduler.safety_margin);

    dispatcher::SchedOptions sched_opts;
    sched_opts.backfill = cfg.scheduler.backfill;
    sched_opts.backfill_depth = cfg.scheduler.backfill_depth;
    sched_opts.system_cap_w = cfg.scheduler.system_cap_w;
    dispatcher::SchedulerState sched(cfg.cluster, sched_opts);

    bus::Bus bus;
    auto acct_sub = bus.subscribe(bus::TopicFilter::parse("davide/+/+/node/power"));
    auto capper_sub = bus.subscribe(bus::TopicFilter::parse("davide/+/+/node/power"));
    std::shared_ptr<bus::Subscription> tap;
    if (opts.record_bus) tap = bus.subscribe(bus::TopicFilter::parse("davide/#"));

    SimReport report;
    report.seed = seed;
    report.system_cap_w = sched.system_cap_w();
    if (opts.record_streams) {
        report.record.emplace();
        report.record->period_ns = kSecondNs;
    }

    std::vector<NodeRt> nodes;
    std::map<std::string, int> node_index;
    nodes.reserve(cfg.cluster.nodes.size());
    for (const auto& ns : cfg.cluster.nodes) {
        NodeRt n;
        n.id = ns.node_id;
        n.rack = ns.rack_id;
        n.spec = &ns;
        n.model.p_idle_w = cluster::effective_idle_w(ns);
        n.model.p_max_w = ns.max_power_w;
        n.model.alpha = cfg.powercap.alpha;
        n.model.beta = cfg.powercap.beta;
        n.model.knob_min = cfg.powercap.knob_min;
        n.model.validate();
        n.ctrl.kp = cfg.powercap.kp;
        n.ctrl.ki = cfg.powercap.ki;
        n.topic = bus::sample_topic(ns.rack_id, ns.node_id, "node");
        if (cfg.telemetry.publish_component_channels) {
            std::map<std::string, int> per_kind;
            for (const auto& comp : ns.components) {
                const char* kind = comp.kind == cluster::ComponentKind::CPU   ? "cpu"
                                   : comp.kind == cluster::ComponentKind::GPU ? "gpu"
                                   : comp.kind == cluster::ComponentKind::MEM ? "mem"
                                                                              : "aux";
                std::string channel = kind + std::to_string(per_kind[kind]++);
                n.component_topics.emplace_back(channel,
                                                bus::sample_topic(ns.rack_id, ns.node_id, channel));
            }
        }
        n.seg_power_w = n.model.p_idle_w;
        node_index[n.id] = static_cast<int>(nodes.size());
        nodes.push_back(std::move(n));
    }

    report.jobs.resize(w.jobs.size());
    std::map<std::string, int> job_index;
    for (size_t i = 0; i < w.jobs.size(); ++i) {
        const auto& req = w.jobs[i].request;
        auto& out = report.jobs[i];
        out.job_id = req.job_id;
        out.user = req.user;
        out.app_tag = req.app_tag;
        out.nodes = req.nodes_requested;
        out.submit_ns = req.submit_time_ns;
        job_index[req.job_id] = static_cast<int>(i);
    }

    std::vector<JobRt> jobs(w.jobs.size());
    std::vector<int> running;

    auto accumulate = [](NodeRt& n, std::int64_t at_ns, double new_power_w) {
        n.acc_wns += n.seg_power_w * static_cast<double>(at_ns - n.seg_start_ns);
        n.seg_start_ns = at_ns;
        n.seg_power_w = new_power_w;
    };
    auto busy_power = [](const NodeRt& n, double per_node_w) {
        return powercap::node_power(n.model, n.knob, utilization(n.model, per_node_w));
    };

    // Completions landing exactly on a boundary release their nodes at the
    // next tick; their outcome rows are final as soon as they are detected.
    std::vector<int> boundary_release;
    std::vector<int> energy_close;  // jobs whose last charged tick just shut

    size_t next_submit = 0;
    bool resched = true;
    std::int64_t t = 0;
    char buf[64];

    while (true) {
        const std::int64_t t_ns = t * kSecondNs;

        // 1. Boundary completions detected at the previous tick's close.
        for (int j : boundary_release) {
            sched.on_job_end(report.jobs[j].job_id, t_ns);
            for (int ni : jobs[j].nodes) nodes[ni].job_idx = -1;
            resched = true;
        }
        boundary_release.clear();

        // 2. Submissions due by now.
        while (next_submit < w.jobs.size() && w.jobs[next_submit].request.submit_time_ns <= t_ns) {
            const auto& wj = w.jobs[next_submit];
            auto& out = report.jobs[next_submit];
            double predicted;
            if (opts.oracle_predictor) {
                predicted = wj.true_per_node_w * wj.request.nodes_requested;
                out.tier = "oracle";
            } else {
                const auto p = predictor::predict(model, wj.request);
                predicted = p.total_w;
                out.tier = predictor::tier_name(p.tier);
            }
            out.predicted_w = predicted;
            report.decisions.push_back(
                {t_ns, "submit", wj.request.job_id, wj.request.nodes_requested, predicted, -1});
            if (!sched.enqueue(wj.request, predicted)) {
                out.rejected = true;
                report.decisions.push_back(
                    {t_ns, "reject", wj.request.job_id, wj.request.nodes_requested, predicted, -1});
            } else {
                resched = true;
            }
            ++next_submit;
        }

        if (sched.running_count() == 0 && sched.queue_depth() == 0 && next_submit >= w.jobs.size())
            break;

        // 3. Scheduling acts on tick boundaries, only when state has moved.
        if (resched) {
            const auto tick = sched.schedule_tick(t_ns);
            resched = false;
            for (const auto& start : tick.starts) {
                const int j = job_index.at(start.job_id);
                JobRt& job = jobs[j];
                job.start_ns = t_ns;
                job.total_work_s = static_cast<double>(w.jobs[j].true_runtime_s);
                job.phases = w.jobs[j].phases.empty()
                                 ? std::vector<workload::PowerPhase>{
                                       {job.total_work_s, w.jobs[j].true_per_node_w}}
                                 : w.jobs[j].phases;
                for (const auto& node_id : start.nodes) {
                    const int ni = node_index.at(node_id);
                    job.nodes.push_back(ni);
                    nodes[ni].job_idx = j;
                }
                running.push_back(j);
                auto& out = report.jobs[j];
                out.start_ns = t_ns;
                out.backfilled = start.backfilled;
                report.decisions.push_back({t_ns, start.backfilled ? "backfill" : "start",
                                            start.job_id, static_cast<int>(start.nodes.size()),
                                            start.predicted_w, -1});
            }
            if (tick.reservation_changed && sched.reservation()) {
                const auto& res = *sched.reservation();
                report.decisions.push_back({t_ns, "reserve", res.job_id, res.nodes, 0, res.start_ns});
            }
        }
        const double predicted_w_tick = sched.predicted_load_w();

        // 4. Open the tick: fix node draws and job rates.
        for (auto& n : nodes) {
            n.acc_wns = 0;
            n.seg_start_ns = t_ns;
            n.attr_idx = n.job_idx;
            n.seg_power_w = n.job_idx < 0
                                ? n.model.p_idle_w
                                : busy_power(n, jobs[n.job_idx].phases[jobs[n.job_idx].phase_idx].per_node_w);
        }
        for (int j : running) {
            double rate = 1.0;
            for (int ni : jobs[j].nodes)
                rate = std::min(rate, powercap::work_rate(nodes[ni].model, nodes[ni].knob));
            jobs[j].rate = rate;
        }

        // 5. Advance running jobs through [t, t+1); split node segments at
        // phase changes, idle the nodes at mid-tick completions.
        const std::int64_t end_ns = t_ns + kSecondNs;
        std::vector<std::pair<std::int64_t, int>> mid_ends;
        for (int j : running) {
            JobRt& job = jobs[j];
            std::int64_t cursor = t_ns;
            while (cursor < end_ns) {
                const double to_boundary = phase_boundary(job) - job.progress_s;
                const double dt_ns = to_boundary / job.rate * 1e9;
                const double gap = static_cast<double>(end_ns - cursor);
                if (dt_ns < gap - 0.5) {
                    const std::int64_t at = cursor + std::llround(dt_ns);
                    if (job.phase_idx + 1 < job.phases.size()) {
                        job.progress_s = phase_boundary(job);
                        ++job.phase_idx;
                        for (int ni : job.nodes)
                            accumulate(nodes[ni], at,
                                       busy_power(nodes[ni], job.phases[job.phase_idx].per_node_w));
                        cursor = at;
                    } else {
                        job.progress_s = job.total_work_s;
                        for (int ni : job.nodes) {
                            accumulate(nodes[ni], at, nodes[ni].model.p_idle_w);
                            nodes[ni].job_idx = -1;
                        }
                        mid_ends.emplace_back(at, j);
                        break;
                    }
                } else {
                    const double advanced = job.rate * gap * 1e-9;
                    if (job.phase_idx + 1 == job.phases.size() &&
                        job.progress_s + advanced >= job.total_work_s - 1e-9) {
                        job.progress_s = job.total_work_s;
                        job.done = true;
                        boundary_release.push_back(j);
                        energy_close.push_back(j);
                        report.jobs[j].end_ns = end_ns;
                        report.decisions.push_back({end_ns, "end", report.jobs[j].job_id,
                                                    report.jobs[j].nodes,
                                                    report.jobs[j].predicted_w, -1});
                    } else {
                        job.progress_s += advanced;
                    }
                    break;
                }
            }
        }
        std::sort(mid_ends.begin(), mid_ends.end());
        for (const auto& [at, j] : mid_ends) {
            sched.on_job_end(report.jobs[j].job_id, at);
            jobs[j].done = true;
            energy_close.push_back(j);
            report.jobs[j].end_ns = at;
            report.decisions.push_back({at, "end", report.jobs[j].job_id, report.jobs[j].nodes,
                                        report.jobs[j].predicted_w, -1});
            resched = true;
        }
        if (!mid_ends.empty() || !boundary_release.empty())
            running.erase(
                std::remove_if(running.begin(), running.end(), [&](int j) { return jobs[j].done; }),
                running.end());

        // 6. Close the tick: publish one decimated-block mean per node.
        for (auto& n : nodes) {
            const double mean_w =
                (n.acc_wns + n.seg_power_w * static_cast<double>(end_ns - n.seg_start_ns)) / 1e9;
            const auto q = telemetry::quantize(mean_w, cfg.telemetry.adc);
            telemetry::PowerSample s;
            s.node_id = n.id;
            s.channel = "node";
            s.timestamp_ns = t_ns;
            s.power_uw = std::llround(q.value_w * 1e6);
            bus.publish(n.topic, bus::encode_sample(s));
            if (!n.component_topics.empty()) {
                // Component split: state-gated idle share plus dynamic power
                // spread over ON components by their envelope.
                double on_max = 0;
                for (const auto& comp : n.spec->components)
                    if (comp.state == cluster::ComponentState::ON) on_max += comp.max_power_w;
                const double dyn = std::max(0.0, q.value_w - n.model.p_idle_w);
                for (size_t ci = 0; ci < n.spec->components.size(); ++ci) {
                    const auto& comp = n.spec->components[ci];
                    double cw = 0;
                    if (comp.state == cluster::ComponentState::ON)
                        cw = comp.idle_power_w + (on_max > 0 ? dyn * comp.max_power_w / on_max : 0);
                    else if (comp.state == cluster::ComponentState::SLEEP)
                        cw = comp.sleep_power_w;
                    telemetry::PowerSample cs;
                    cs.node_id = n.id;
                    cs.channel = n.component_topics[ci].first;
                    cs.timestamp_ns = t_ns;
                    cs.power_uw = std::llround(cw * 1e6);
                    bus.publish(n.component_topics[ci].second, bus::encode_sample(cs));
                }
            }
        }

        // Accounting agent: decode samples off the bus, attribute the tick.
        std::int64_t measured_uw_total = 0;
        while (auto env = acct_sub->pop()) {
            const auto sample = bus::decode_sample(env->payload);
            NodeRt& n = nodes[node_index.at(env->topic.segments[2])];
            n.last_sample_uw = sample.power_uw;
            n.stream_sum_uw += sample.power_uw;
            if (n.attr_idx >= 0) jobs[n.attr_idx].sum_uw += sample.power_uw;
            measured_uw_total += sample.power_uw;
            if (report.record) {
                telemetry::PowerSample rec = sample;
                rec.node_id = n.id;
                rec.channel = "node";
                report.record->node_streams[n.id].push_back(std::move(rec));
            }
        }
        // Capping agent: independent view of the same stream.
        std::map<std::string, double> measured_by_node;
        while (auto env = capper_sub->pop()) {
            const auto sample = bus::decode_sample(env->payload);
            measured_by_node[env->topic.segments[2]] = static_cast<double>(sample.power_uw) / 1e6;
        }

        const double measured_w = static_cast<double>(measured_uw_total) / 1e6;
        report.timeline.push_back({t, predicted_w_tick, measured_w});
        if (measured_w > report.system_cap_w) {
            ++report.violation_seconds;
            report.max_overshoot_w = std::max(report.max_overshoot_w, measured_w - report.system_cap_w);
        }

        // Jobs whose last charged tick just closed publish their energy.
        std::sort(energy_close.begin(), energy_close.end());
        for (int j : energy_close) {
            auto& out = report.jobs[j];
            out.energy_j = static_cast<double>(jobs[j].sum_uw) / 1e6;
            const double wall = static_cast<double>(out.end_ns - out.start_ns) * 1e-9;
            out.mean_power_w = wall > 0 ? out.energy_j / wall : 0;
            std::snprintf(buf, sizeof buf, "%.6f", out.energy_j);
            bus.publish(bus::job_energy_topic(out.job_id), buf);
        }
        energy_close.clear();

        // 7. Reactive rebalance against the measured total.
        if (cfg.scheduler.reactive) {
            const auto rb = sched.reactive_rebalance(measured_by_node, end_ns);
            for (const auto& d : rb.directives) {
                NodeRt& n = nodes[node_index.at(d.node_id)];
                if (d.cap_w >= n.model.p_max_w) {
                    n.capped = false;
                    n.knob = 1.0;
                    n.ctrl.integral = 0;
                    report.decisions.push_back({end_ns, "lift", d.node_id, 0, d.cap_w, -1});
                } else {
                    if (!n.capped) {
                        n.capped = true;
                        n.ctrl.integral = 0;
                    }
                    n.ctrl.set_point_w = std::max(d.cap_w, n.model.p_idle_w);
                    report.decisions.push_back({end_ns, "cap", d.node_id, 0, d.cap_w, -1});
                    ++report.reactive_directive_count;
                }
            }
        }

        // 8. Capped nodes run their PI loop once per control period.
        if ((t + 1) % ctrl_every == 0) {
            for (auto& n : nodes) {
                if (!n.capped) continue;
                n.ctrl.knob = n.knob;
                n.ctrl = powercap::step_controller(
                    n.model, n.ctrl, static_cast<double>(n.last_sample_uw) / 1e6, period_s);
                n.knob = n.ctrl.knob;
            }
        }

        ++t;
    }

    report.makespan_s = t;

    // Incremental ledger: every figure is an integer microwatt-second sum,
    // so jobs plus idle equals the whole-machine total exactly.
    std::int64_t total_uw = 0, jobs_uw = 0;
    for (const auto& n : nodes) total_uw += n.stream_sum_uw;
    for (size_t i = 0; i < jobs.size(); ++i) {
        if (report.jobs[i].start_ns < 0) continue;
        report.ledger.per_job_j[report.jobs[i].job_id] = static_cast<double>(jobs[i].sum_uw) / 1e6;
        report.ledger.per_user_j[report.jobs[i].user] += static_cast<double>(jobs[i].sum_uw) / 1e6;
        jobs_uw += jobs[i].sum_uw;
    }
    report.ledger.total_j = static_cast<double>(total_uw) / 1e6;
    report.ledger.idle_j = static_cast<double>(total_uw - jobs_uw) / 1e6;

    if (report.record) {
        report.record->t0_ns = 0;
        report.record->t1_ns = report.makespan_s * kSecondNs;
        for (const auto& n : nodes)
            if (!report.record->node_streams.count(n.id)) report.record->node_streams[n.id] = {};
        for (size_t i = 0; i < jobs.size(); ++i) {
            if (report.jobs[i].start_ns < 0) continue;
            for (int ni : jobs[i].nodes)
                report.record->allocations.push_back({report.jobs[i].job_id, nodes[ni].id,
                                                      report.jobs[i].start_ns, report.jobs[i].end_ns});
            report.record->job_users[report.jobs[i].job_id] = report.jobs[i].user;
        }
    }
    if (tap) {
        while (auto env = tap->pop()) {
            std::string payload = env->payload;
            if (!payload.empty() && payload.back() == '\n') payload.pop_back();
            report.bus_log.push_back(env->topic.str() + " " + payload);
        }
    }
    return report;
}

}  // namespace davide::sim
