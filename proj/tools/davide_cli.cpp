// Command-line front end: validate configs, run simulations and sweeps,
// train/evaluate power predictors, and replay recorded bus traffic over TCP.
//
// Exit codes: 0 success, 1 domain violation, 2 input/parse error.

#include <algorithm>
#include <cinttypes>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "davide/config.hpp"
#include "davide/errors.hpp"
#include "davide/manifest.hpp"
#include "davide/predictor.hpp"
#include "davide/replay.hpp"
#include "davide/report.hpp"
#include "davide/sim.hpp"
#include "davide/workload.hpp"

namespace fs = std::filesystem;
using namespace davide;

namespace {

std::string read_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ParseError("cannot open " + path);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw DomainError("cannot open " + path.string() + " for writing");
    f.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!f) throw DomainError("short write to " + path.string());
}

struct SimulateArgs {
    std::string config_path;
    std::string workload_path;  // empty: synthesize from [workload]
    std::uint64_t seed = 0;
    std::string out_dir = "out";
    std::string model_path;
    std::int64_t jobs_override = -1;
    double cap_override = -1;
    bool oracle = false;
    bool no_backfill = false;
    bool no_reactive = false;
    bool record_bus = false;
};

struct LoadedRun {
    config::RunConfig cfg;
    workload::Workload wl;
    sim::SimOptions opts;
    manifest::RunManifest mf;
};

LoadedRun prepare_run(const SimulateArgs& args) {
    LoadedRun run;
    const std::string config_text = read_file(args.config_path);
    run.cfg = config::load_run_config(config_text);
    if (args.no_backfill) run.cfg.scheduler.backfill = false;
    if (args.no_reactive) run.cfg.scheduler.reactive = false;
    if (args.cap_override > 0) run.cfg.scheduler.system_cap_w = args.cap_override;

    if (!args.workload_path.empty()) {
        workload::SwfConfig swf;
        swf.cores_per_node = run.cfg.cores_per_node;
        swf.power_min_w = run.cfg.synth.power_min_w;
        swf.power_max_w = run.cfg.synth.power_max_w;
        std::vector<std::string> warnings;
        run.wl = workload::parse_swf(read_file(args.workload_path), swf, &warnings);
        for (const auto& wmsg : warnings) std::fprintf(stderr, "warning: %s\n", wmsg.c_str());
        run.mf.workload = "swf:" + args.workload_path;
    } else {
        workload::SynthSpec spec = run.cfg.synth;
        if (args.jobs_override >= 0) spec.n_jobs = args.jobs_override;
        run.wl = workload::generate_workload(spec, args.seed);
        run.mf.workload = "synth:" + std::to_string(spec.n_jobs);
    }

    run.opts.oracle_predictor = args.oracle;
    run.opts.record_bus = args.record_bus;
    if (!args.model_path.empty()) run.opts.model = predictor::load_model(read_file(args.model_path));

    run.mf.config_path = args.config_path;
    run.mf.config_hash = manifest::hash_hex(config_text);
    run.mf.seed = args.seed;
    run.mf.out_dir = args.out_dir;
    return run;
}

void write_run_artifacts(const fs::path& dir, const sim::SimReport& rep,
                         const manifest::RunManifest& mf) {
    try {
        report::write_report(dir, rep);
        write_file(dir / "manifest.ini", manifest::render_manifest(mf));
    } catch (...) {
        // No partial run directories: drop whatever this run managed to write.
        for (const char* name : {"jobs.csv", "timeline.csv", "decisions.csv", "ledger.csv",
                                 "summary.txt", "bus.log", "manifest.ini"}) {
            std::error_code ec;
            fs::remove(dir / name, ec);
        }
        throw;
    }
}

int cmd_validate(const std::string& config_path, const std::string& workload_path,
                 const std::string& manifest_path) {
    const std::string config_text = read_file(config_path);
    const auto cfg = config::load_run_config(config_text);
    const auto violations = cluster::validate(cfg.cluster);
    for (const auto& v : violations) std::printf("violation: %s\n", v.c_str());
    std::printf("nodes             %zu\n", cfg.cluster.nodes.size());
    std::printf("racks             %zu\n", cfg.cluster.racks.size());
    std::printf("peak_power_w      %.3f\n", cluster::peak_power(cfg.cluster));
    std::printf("system_cap_w      %.3f\n", cfg.scheduler.system_cap_w.value_or(cfg.cluster.system_cap_w));
    if (!workload_path.empty()) {
        workload::SwfConfig swf;
        swf.cores_per_node = cfg.cores_per_node;
        swf.power_min_w = cfg.synth.power_min_w;
        swf.power_max_w = cfg.synth.power_max_w;
        std::vector<std::string> warnings;
        const auto wl = workload::parse_swf(read_file(workload_path), swf, &warnings);
        for (const auto& wmsg : warnings) std::fprintf(stderr, "warning: %s\n", wmsg.c_str());
        workload::validate_workload(wl);
        std::printf("workload_jobs     %zu\n", wl.jobs.size());
    }
    if (!manifest_path.empty()) {
        const auto mf = manifest::parse_manifest(read_file(manifest_path));
        manifest::verify_config_hash(mf, config_text);
        std::printf("manifest          ok (hash %s)\n", mf.config_hash.c_str());
    }
    if (!violations.empty()) return 1;
    std::printf("ok\n");
    return 0;
}

int cmd_simulate(const SimulateArgs& args) {
    const auto run = prepare_run(args);
    const auto rep = sim::run(run.cfg, run.wl, args.seed, run.opts);
    write_run_artifacts(args.out_dir, rep, run.mf);
    const double fraction =
        rep.makespan_s > 0
            ? static_cast<double>(rep.violation_seconds) / static_cast<double>(rep.makespan_s)
            : 0.0;
    std::printf("jobs=%zu makespan_s=%" PRId64 " energy_j=%.6f violation_fraction=%.4f\n",
                rep.jobs.size(), rep.makespan_s, rep.ledger.total_j, fraction);
    return 0;
}

int cmd_train(const std::string& history_path, const std::string& out_path, double default_w,
              double margin) {
    const auto history = predictor::parse_history_csv(read_file(history_path));
    std::vector<std::string> warnings;
    const auto model = predictor::train(history, default_w, margin, &warnings);
    for (const auto& wmsg : warnings) std::fprintf(stderr, "warning: %s\n", wmsg.c_str());
    if (history.empty())
        std::fprintf(stderr, "warning: empty history, model has only the default tier\n");
    write_file(out_path, predictor::save_model(model));
    std::printf("jobs=%zu tier1_keys=%zu tier2_keys=%zu default_w=%.3f margin=%.3f\n",
                history.size(), model.by_user_app.size(), model.by_user.size(),
                model.default_w_per_node, model.safety_margin);
    return 0;
}

int cmd_evaluate(const std::string& model_path, const std::string& test_path) {
    const auto model = predictor::load_model(read_file(model_path));
    const auto test = predictor::parse_history_csv(read_file(test_path));
    const auto metrics = predictor::evaluate(model, test);
    std::printf("mape=%.6f rmse=%.6f\n", metrics.mape, metrics.rmse);
    for (const auto t : {predictor::Tier::UserApp, predictor::Tier::User, predictor::Tier::Global,
                         predictor::Tier::Default}) {
        const auto it = metrics.tier_counts.find(t);
        std::printf("%s=%" PRId64 "\n", predictor::tier_name(t),
                    it == metrics.tier_counts.end() ? 0 : it->second);
    }
    return 0;
}

int cmd_replay(const std::string& report_dir, int port) {
    const auto lines = replay::load_bus_log(fs::path(report_dir) / "bus.log");
    if (lines.empty()) {
        std::printf("served 0 lines\n");
        return 0;
    }
    const auto served = replay::serve_once(lines, static_cast<std::uint16_t>(port),
                                           [](std::uint16_t bound) {
                                               std::printf("listening on 127.0.0.1:%u\n", bound);
                                               std::fflush(stdout);
                                           });
    std::printf("served %zu lines\n", served);
    return 0;
}

int cmd_sweep(const SimulateArgs& base, const std::vector<double>& caps) {
    struct Result {
        double cap_w = 0;
        std::int64_t started = 0;
        double avg_wait_s = 0;
        double peak_w = 0;
        std::int64_t violation_s = 0;
        double energy_j = 0;
        std::exception_ptr error;
    };
    std::vector<Result> results(caps.size());
    std::vector<std::thread> workers;
    workers.reserve(caps.size());
    for (size_t i = 0; i < caps.size(); ++i) {
        workers.emplace_back([&, i] {
            Result& r = results[i];
            r.cap_w = caps[i];
            try {
                SimulateArgs args = base;
                args.cap_override = caps[i];
                args.out_dir = (fs::path(base.out_dir) /
                                ("cap_" + std::to_string(static_cast<long long>(caps[i]))))
                                   .string();
                auto run = prepare_run(args);
                run.mf.out_dir = args.out_dir;
                const auto rep = sim::run(run.cfg, run.wl, args.seed, run.opts);
                write_run_artifacts(args.out_dir, rep, run.mf);
                double wait_sum = 0;
                for (const auto& j : rep.jobs) {
                    if (j.rejected || j.start_ns < 0) continue;
                    ++r.started;
                    wait_sum += j.wait_s();
                }
                r.avg_wait_s = r.started > 0 ? wait_sum / static_cast<double>(r.started) : 0.0;
                for (const auto& p : rep.timeline) r.peak_w = std::max(r.peak_w, p.measured_w);
                r.violation_s = rep.violation_seconds;
                r.energy_j = rep.ledger.total_j;
            } catch (...) {
                r.error = std::current_exception();
            }
        });
    }
    for (auto& th : workers) th.join();
    for (const auto& r : results)
        if (r.error) std::rethrow_exception(r.error);

    std::printf("cap_w,jobs_started,avg_wait_s,peak_measured_w,violation_seconds,energy_j\n");
    for (const auto& r : results)
        std::printf("%.3f,%" PRId64 ",%.6f,%.6f,%" PRId64 ",%.6f\n", r.cap_w, r.started,
                    r.avg_wait_s, r.peak_w, r.violation_s, r.energy_j);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Energy-aware cluster middleware: telemetry, accounting, capping, dispatch"};
    app.require_subcommand(1);

    std::string config_path, workload_path, manifest_path;
    auto* validate = app.add_subcommand("validate", "Check a config (and optionally a workload)");
    validate->add_option("--config", config_path, "Run configuration INI")->required();
    validate->add_option("--workload", workload_path, "SWF trace to check against the config");
    validate->add_option("--manifest", manifest_path, "Manifest whose config hash must match");

    SimulateArgs sim_args;
    auto add_sim_options = [&](CLI::App* cmd, bool with_out) {
        cmd->add_option("--config", sim_args.config_path, "Run configuration INI")->required();
        cmd->add_option("--seed", sim_args.seed, "Root seed; all randomness derives from it")
            ->required();
        cmd->add_option("--workload", sim_args.workload_path, "SWF trace (default: synthesize)");
        cmd->add_option("--jobs", sim_args.jobs_override, "Override synthetic job count");
        cmd->add_option("--model", sim_args.model_path, "Trained power model CSV");
        cmd->add_flag("--oracle-predictor", sim_args.oracle, "Predict each job's true mean power");
        cmd->add_flag("--no-backfill", sim_args.no_backfill, "Plain FCFS, no backfilling");
        cmd->add_flag("--no-reactive", sim_args.no_reactive, "Disable reactive cap directives");
        if (with_out) {
            cmd->add_option("--out", sim_args.out_dir, "Report directory (default: out)");
            cmd->add_option("--cap", sim_args.cap_override, "Override the system cap in watts");
            cmd->add_flag("--record-bus", sim_args.record_bus, "Write bus.log with all traffic");
        }
    };
    auto* simulate = app.add_subcommand("simulate", "Run one simulation and write a report");
    add_sim_options(simulate, true);

    std::string history_path, model_out, model_path, test_path;
    double default_w = 2000, margin = 1.0;
    auto* train = app.add_subcommand("train", "Fit a tiered power model from job history");
    train->add_option("--history", history_path, "Completed-job CSV")->required();
    train->add_option("--out", model_out, "Where to write the model CSV")->required();
    train->add_option("--default-w", default_w, "Per-node fallback watts (default 2000)");
    train->add_option("--margin", margin, "Safety margin >= 1 applied to predictions");

    auto* evaluate = app.add_subcommand("evaluate", "Score a model against a test CSV");
    evaluate->add_option("--model", model_path, "Model CSV from train")->required();
    evaluate->add_option("--test", test_path, "Held-out job CSV")->required();

    std::string report_dir;
    int port = 0;
    auto* replay_cmd = app.add_subcommand("replay", "Serve a recorded bus log over TCP");
    replay_cmd->add_option("--report", report_dir, "Report directory containing bus.log")
        ->required();
    replay_cmd->add_option("--port", port, "TCP port (default 0 picks a free one)")
        ->check(CLI::Range(0, 65535));

    std::vector<double> caps;
    auto* sweep = app.add_subcommand("sweep", "Run one simulation per cap, concurrently");
    add_sim_options(sweep, false);
    sweep->add_option("--caps", caps, "System caps in watts, comma separated")
        ->required()
        ->delimiter(',');
    sweep->add_option("--out", sim_args.out_dir, "Parent directory for cap_<w> subdirectories");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (validate->parsed()) return cmd_validate(config_path, workload_path, manifest_path);
        if (simulate->parsed()) return cmd_simulate(sim_args);
        if (train->parsed()) return cmd_train(history_path, model_out, default_w, margin);
        if (evaluate->parsed()) return cmd_evaluate(model_path, test_path);
        if (replay_cmd->parsed()) return cmd_replay(report_dir, port);
        if (sweep->parsed()) return cmd_sweep(sim_args, caps);
    } catch (const ParseError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const DomainError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
