#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace davide::predictor {

/* Job-to-power prediction with graceful fallback. Keys are looked up most
 * specific first: (user, app) -> user -> global -> configured default.
 * Means are accumulated in integer milliwatts so training is insensitive to
 * history order. */

struct JobRequest {
    std::string job_id;
    std::string user;
    std::string app_tag;          // "unknown" when the trace has none
    int nodes_requested = 1;
    std::int64_t walltime_req_s = 0;
    std::int64_t submit_time_ns = 0;

    bool operator==(const JobRequest&) const = default;
};

struct JobRecord {
    JobRequest request;
    std::int64_t actual_runtime_s = 0;
    double mean_power_w = 0;       // whole allocation
    double per_node_mean_w = 0;
};

enum class Tier { UserApp, User, Global, Default };
const char* tier_name(Tier t);

struct TierStat {
    std::int64_t sum_mw = 0;
    std::int64_t count = 0;
    double mean_w() const { return static_cast<double>(sum_mw) / (1000.0 * static_cast<double>(count)); }
};

struct PowerModel {
    std::map<std::pair<std::string, std::string>, TierStat> by_user_app;
    std::map<std::string, TierStat> by_user;
    TierStat global;                 // count == 0 means unpopulated
    double default_w_per_node = 2000;  // node envelope: safe overestimate
    double safety_margin = 1.0;        // >= 1
};

struct Prediction {
    double total_w = 0;  // per-node mean * nodes * margin
    Tier tier = Tier::Default;
};

/* Builds per-key means of per-node power from completed jobs. Records with
 * non-positive runtime are skipped; a note per skip lands in `warnings` when
 * given. Empty history yields a default-only model. */
PowerModel train(std::span<const JobRecord> history, double default_w_per_node,
                 double safety_margin, std::vector<std::string>* warnings = nullptr);

Prediction predict(const PowerModel& model, const JobRequest& request);

struct EvalMetrics {
    double mape = 0;  // mean |pred - actual| / actual, over total watts
    double rmse = 0;
    std::map<Tier, std::int64_t> tier_counts;
};

// Rejects an empty test set and non-positive actual powers.
EvalMetrics evaluate(const PowerModel& model, std::span<const JobRecord> test);

/* Model file format (CSV): "tier,key,mean_w_per_node,count" with one row
 * per populated key plus "default" and "margin" rows. tier1 keys join user
 * and app with '|'. */
std::string save_model(const PowerModel& model);
PowerModel load_model(const std::string& text);

/* Job history CSV: "job_id,user,app_tag,nodes,walltime_req_s,runtime_s,
 * mean_power_w" with a header line. Used by the train/evaluate commands. */
std::vector<JobRecord> parse_history_csv(const std::string& text);
std::string render_history_csv(std::span<const JobRecord> records);

}  // namespace davide::predictor
