#include "davide/workload.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "davide/errors.hpp"
#include "davide/rng.hpp"

namespace davide::workload {

namespace {

constexpr std::int64_t kSecondNs = 1000000000;

// Keyed draw on the 1 W grid; pure in (user, app) so repeat jobs repeat power.
double keyed_power(const std::string& user, const std::string& app, double min_w, double max_w) {
    const std::uint64_t h = rng::fnv1a64(app, rng::fnv1a64(user + "\x1f"));
    const double u = static_cast<double>(h >> 11) * 0x1.0p-53;
    return std::floor(min_w + (max_w - min_w) * u + 0.5);
}

}  // namespace

Workload parse_swf(const std::string& text, const SwfConfig& config,
                   std::vector<std::string>* warnings) {
    if (config.cores_per_node < 1) throw DomainError("cores_per_node must be >= 1");
    if (config.power_min_w <= 0 || config.power_max_w < config.power_min_w)
        throw DomainError("bad synthetic power range");

    Workload w;
    int line_no = 0;
    size_t pos = 0;
    while (pos < text.size()) {
        size_t nl = text.find('\n', pos);
        std::string line = text.substr(pos, nl == std::string::npos ? text.size() - pos : nl - pos);
        pos = nl == std::string::npos ? text.size() : nl + 1;
        ++line_no;
        if (size_t sc = line.find(';'); sc != std::string::npos) line = line.substr(0, sc);

        std::istringstream fields(line);
        std::vector<std::string> f;
        for (std::string tok; fields >> tok;) f.push_back(tok);
        if (f.empty()) continue;
        if (f.size() < 18) throw ParseError("expected 18 SWF fields, got " + std::to_string(f.size()), line_no);

        auto num = [&](size_t idx) -> double {
            char* end = nullptr;
            double v = std::strtod(f[idx - 1].c_str(), &end);
            if (end == f[idx - 1].c_str() || *end != '\0')
                throw ParseError("bad SWF field " + std::to_string(idx) + ": '" + f[idx - 1] + "'", line_no);
            return v;
        };

        const double runtime = num(4);
        if (runtime <= 0) {
            if (warnings)
                warnings->push_back("line " + std::to_string(line_no) + ": job " + f[0] +
                                    " skipped (runtime " + f[3] + ")");
            continue;
        }

        Job job;
        job.request.job_id = "j" + f[0];
        job.request.user = "u" + f[11];
        job.request.app_tag = f[13] == "-1" ? "unknown" : "a" + f[13];

        double procs = num(8);
        if (procs <= 0) procs = num(5);  // fall back to allocated processors
        if (procs <= 0) {
            if (warnings)
                warnings->push_back("line " + std::to_string(line_no) + ": job " + f[0] +
                                    " skipped (no processor count)");
            continue;
        }
        job.request.nodes_requested =
            static_cast<int>((static_cast<std::int64_t>(procs) + config.cores_per_node - 1) /
                             config.cores_per_node);

        job.true_runtime_s = static_cast<std::int64_t>(std::llround(runtime));
        double req_time = num(9);
        job.request.walltime_req_s =
            req_time > 0 ? static_cast<std::int64_t>(std::llround(req_time)) : job.true_runtime_s;
        // Jobs are not killed at the walltime here, so never under-request.
        job.request.walltime_req_s = std::max(job.request.walltime_req_s, job.true_runtime_s);
        job.request.submit_time_ns = static_cast<std::int64_t>(std::llround(num(2))) * kSecondNs;

        if (f.size() >= 19) {
            char* end = nullptr;
            job.true_per_node_w = std::strtod(f[18].c_str(), &end);
            if (end == f[18].c_str() || *end != '\0' || job.true_per_node_w <= 0)
                throw ParseError("bad power extension field: '" + f[18] + "'", line_no);
        } else {
            job.true_per_node_w =
                keyed_power(job.request.user, job.request.app_tag, config.power_min_w, config.power_max_w);
        }
        w.jobs.push_back(std::move(job));
    }

    std::stable_sort(w.jobs.begin(), w.jobs.end(), [](const Job& a, const Job& b) {
        return a.request.submit_time_ns < b.request.submit_time_ns;
    });
    return w;
}

Workload generate_workload(const SynthSpec& spec, std::uint64_t seed) {
    if (spec.n_jobs < 0) throw DomainError("n_jobs must be >= 0");
    if (spec.arrival_rate_hz <= 0) throw DomainError("arrival rate must be > 0");
    if (spec.runtime_min_s < 1 || spec.runtime_max_s < spec.runtime_min_s)
        throw DomainError("bad runtime range");
    if (spec.nodes_min < 1 || spec.nodes_max < spec.nodes_min) throw DomainError("bad node range");
    if (spec.power_min_w <= 0 || spec.power_max_w < spec.power_min_w)
        throw DomainError("bad power range");
    if (spec.n_users < 1 || spec.n_apps < 1) throw DomainError("need at least one user and app");
    if (spec.walltime_slack_max < 1.0) throw DomainError("walltime slack must be >= 1");

    auto arrivals = rng::stream(seed, rng::kArrivals);
    auto runtimes = rng::stream(seed, rng::kRuntimes);
    auto powers = rng::stream(seed, rng::kPowers);
    auto nodes = rng::stream(seed, rng::kNodes);
    auto users = rng::stream(seed, rng::kUsers);
    auto apps = rng::stream(seed, rng::kApps);
    auto phase_gen = rng::stream(seed, rng::kPhases);

    Workload w;
    w.jobs.reserve(static_cast<size_t>(spec.n_jobs));
    double clock_s = 0;
    for (std::int64_t i = 0; i < spec.n_jobs; ++i) {
        clock_s += rng::exponential(arrivals, spec.arrival_rate_hz);
        Job job;
        char id[24];
        std::snprintf(id, sizeof id, "j%06lld", static_cast<long long>(i + 1));
        job.request.job_id = id;
        job.request.user = "u" + std::to_string(rng::uniform_int(users, 1, spec.n_users));
        job.request.app_tag = "a" + std::to_string(rng::uniform_int(apps, 1, spec.n_apps));
        job.request.nodes_requested = static_cast<int>(rng::uniform_int(nodes, spec.nodes_min, spec.nodes_max));
        job.request.submit_time_ns = std::llround(clock_s * 1e9);
        job.true_runtime_s = rng::uniform_int(runtimes, spec.runtime_min_s, spec.runtime_max_s);
        const double slack = rng::uniform_real(runtimes, 1.0, spec.walltime_slack_max);
        job.request.walltime_req_s =
            static_cast<std::int64_t>(std::ceil(static_cast<double>(job.true_runtime_s) * slack));

        if (spec.power_by_key) {
            job.true_per_node_w =
                keyed_power(job.request.user, job.request.app_tag, spec.power_min_w, spec.power_max_w);
        } else {
            // 1 W grid: matches the default ADC LSB so telemetry reads back exact.
            job.true_per_node_w = std::floor(rng::uniform_real(powers, spec.power_min_w, spec.power_max_w) + 0.5);
        }

        if (spec.phases > 1) {
            double remaining = static_cast<double>(job.true_runtime_s);
            double weighted = 0;
            for (int p = 0; p < spec.phases; ++p) {
                const double dur = p + 1 == spec.phases
                                       ? remaining
                                       : std::max(1.0, std::floor(remaining / (spec.phases - p)));
                double pw = job.true_per_node_w * rng::uniform_real(phase_gen, 0.7, 1.3);
                pw = std::min(spec.power_max_w, std::max(spec.power_min_w, std::floor(pw + 0.5)));
                job.phases.push_back(PowerPhase{dur, pw});
                weighted += dur * pw;
                remaining -= dur;
                if (remaining <= 0) break;
            }
            job.true_per_node_w = weighted / static_cast<double>(job.true_runtime_s);
        }
        w.jobs.push_back(std::move(job));
    }
    return w;
}

void validate_workload(const Workload& w) {
    std::int64_t prev_submit = -1;
    for (const auto& job : w.jobs) {
        if (job.request.submit_time_ns < prev_submit)
            throw DomainError("workload not sorted by submit time at job '" + job.request.job_id + "'");
        prev_submit = job.request.submit_time_ns;
        if (job.true_runtime_s <= 0)
            throw DomainError("job '" + job.request.job_id + "' has non-positive runtime");
        if (job.request.nodes_requested < 1)
            throw DomainError("job '" + job.request.job_id + "' requests no nodes");
        if (job.true_per_node_w < 0)
            throw DomainError("job '" + job.request.job_id + "' has negative power");
        if (job.request.walltime_req_s < job.true_runtime_s)
            throw DomainError("job '" + job.request.job_id + "' requests less walltime than its runtime");
        if (!job.phases.empty()) {
            double sum = 0;
            for (const auto& p : job.phases) {
                if (p.duration_s <= 0 || p.per_node_w < 0)
                    throw DomainError("job '" + job.request.job_id + "' has a malformed phase");
                sum += p.duration_s;
            }
            if (std::abs(sum - static_cast<double>(job.true_runtime_s)) > 1e-9)
                throw DomainError("job '" + job.request.job_id + "' phases do not sum to its runtime");
        }
    }
}

}  // namespace davide::workload
