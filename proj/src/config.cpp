#include "davide/config.hpp"

#include "davide/errors.hpp"
#include "davide/ini.hpp"

namespace davide::config {

RunConfig load_run_config(const std::string& config_text) {
    RunConfig cfg;
    cfg.cluster = cluster::load_cluster_spec(config_text);

    ini::Doc doc = ini::parse(config_text);
    for (const auto& sec : doc.sections) {
        if (sec.name == "powercap") {
            for (const auto& e : sec.entries) {
                if (e.key == "kp") cfg.powercap.kp = ini::to_double(e);
                else if (e.key == "ki") cfg.powercap.ki = ini::to_double(e);
                else if (e.key == "alpha") cfg.powercap.alpha = ini::to_double(e);
                else if (e.key == "beta") cfg.powercap.beta = ini::to_double(e);
                else if (e.key == "knob_min") cfg.powercap.knob_min = ini::to_double(e);
                else if (e.key == "control_period_s") cfg.powercap.control_period_s = ini::to_double(e);
                else throw ParseError("unknown key '" + e.key + "' in [powercap]", e.line);
            }
            if (cfg.powercap.control_period_s <= 0) throw ParseError("control_period_s must be > 0", sec.line);
        } else if (sec.name == "scheduler") {
            for (const auto& e : sec.entries) {
                if (e.key == "backfill") cfg.scheduler.backfill = ini::to_bool(e);
                else if (e.key == "reactive") cfg.scheduler.reactive = ini::to_bool(e);
                else if (e.key == "backfill_depth") cfg.scheduler.backfill_depth = static_cast<int>(ini::to_int(e));
                else if (e.key == "safety_margin") cfg.scheduler.safety_margin = ini::to_double(e);
                else if (e.key == "system_cap_w") cfg.scheduler.system_cap_w = ini::to_double(e);
                else throw ParseError("unknown key '" + e.key + "' in [scheduler]", e.line);
            }
            if (cfg.scheduler.safety_margin < 1) throw ParseError("safety_margin must be >= 1", sec.line);
            if (cfg.scheduler.backfill_depth < 0) throw ParseError("backfill_depth must be >= 0", sec.line);
        } else if (sec.name == "telemetry") {
            for (const auto& e : sec.entries) {
                if (e.key == "adc_bits") cfg.telemetry.adc.bits = static_cast<int>(ini::to_int(e));
                else if (e.key == "full_scale_w") cfg.telemetry.adc.full_scale_w = ini::to_double(e);
                else if (e.key == "raw_rate_hz") cfg.telemetry.adc.raw_rate_hz = ini::to_int(e);
                else if (e.key == "decimation_factor") cfg.telemetry.adc.decimation_factor = static_cast<int>(ini::to_int(e));
                else if (e.key == "noise_amplitude_w") cfg.telemetry.adc.noise_amplitude_w = ini::to_double(e);
                else if (e.key == "publish_component_channels") cfg.telemetry.publish_component_channels = ini::to_bool(e);
                else throw ParseError("unknown key '" + e.key + "' in [telemetry]", e.line);
            }
            try {
                cfg.telemetry.adc.validate();
            } catch (const DomainError& err) {
                throw ParseError(std::string("bad [telemetry] section: ") + err.what(), sec.line);
            }
        } else if (sec.name == "workload") {
            for (const auto& e : sec.entries) {
                if (e.key == "cores_per_node") cfg.cores_per_node = static_cast<int>(ini::to_int(e));
                else if (e.key == "n_jobs") cfg.synth.n_jobs = ini::to_int(e);
                else if (e.key == "arrival_rate_hz") cfg.synth.arrival_rate_hz = ini::to_double(e);
                else if (e.key == "runtime_min_s") cfg.synth.runtime_min_s = ini::to_int(e);
                else if (e.key == "runtime_max_s") cfg.synth.runtime_max_s = ini::to_int(e);
                else if (e.key == "nodes_min") cfg.synth.nodes_min = static_cast<int>(ini::to_int(e));
                else if (e.key == "nodes_max") cfg.synth.nodes_max = static_cast<int>(ini::to_int(e));
                else if (e.key == "power_min_w") cfg.synth.power_min_w = ini::to_double(e);
                else if (e.key == "power_max_w") cfg.synth.power_max_w = ini::to_double(e);
                else if (e.key == "n_users") cfg.synth.n_users = static_cast<int>(ini::to_int(e));
                else if (e.key == "n_apps") cfg.synth.n_apps = static_cast<int>(ini::to_int(e));
                else if (e.key == "power_by_key") cfg.synth.power_by_key = ini::to_bool(e);
                else if (e.key == "phases") cfg.synth.phases = static_cast<int>(ini::to_int(e));
                else if (e.key == "walltime_slack_max") cfg.synth.walltime_slack_max = ini::to_double(e);
                else throw ParseError("unknown key '" + e.key + "' in [workload]", e.line);
            }
            if (cfg.cores_per_node < 1) throw ParseError("cores_per_node must be >= 1", sec.line);
        }
        // Cluster sections were validated by load_cluster_spec, which also
        // rejects sections neither side knows.
    }

    powercap::NodePowerModel probe;
    probe.alpha = cfg.powercap.alpha;
    probe.beta = cfg.powercap.beta;
    probe.knob_min = cfg.powercap.knob_min;
    try {
        probe.validate();
    } catch (const DomainError& err) {
        throw ParseError(std::string("bad [powercap] section: ") + err.what());
    }
    return cfg;
}

}  // namespace davide::config
