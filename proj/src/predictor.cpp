#include "davide/predictor.hpp"

#include <cmath>
#include <cstdio>

#include "davide/errors.hpp"

namespace davide::predictor {

namespace {

std::vector<std::string> split_csv_line(std::string_view line) {
    std::vector<std::string> fields;
    size_t pos = 0;
    while (true) {
        size_t c = line.find(',', pos);
        fields.emplace_back(line.substr(pos, c == std::string_view::npos ? line.size() - pos : c - pos));
        if (c == std::string_view::npos) break;
        pos = c + 1;
    }
    return fields;
}

double parse_double_field(const std::string& s, int line) {
    char* end = nullptr;
    double v = std::strtod(s.c_str(), &end);
    if (end == s.c_str() || *end != '\0') throw ParseError("expected number, got '" + s + "'", line);
    return v;
}

std::int64_t parse_int_field(const std::string& s, int line) {
    char* end = nullptr;
    long long v = std::strtoll(s.c_str(), &end, 10);
    if (end == s.c_str() || *end != '\0') throw ParseError("expected integer, got '" + s + "'", line);
    return v;
}

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

}  // namespace

const char* tier_name(Tier t) {
    switch (t) {
        case Tier::UserApp: return "tier1";
        case Tier::User: return "tier2";
        case Tier::Global: return "tier3";
        case Tier::Default: return "default";
    }
    return "default";
}

PowerModel train(std::span<const JobRecord> history, double default_w_per_node,
                 double safety_margin, std::vector<std::string>* warnings) {
    if (default_w_per_node <= 0) throw DomainError("default power must be > 0");
    if (safety_margin < 1) throw DomainError("safety margin must be >= 1");
    PowerModel model;
    model.default_w_per_node = default_w_per_node;
    model.safety_margin = safety_margin;
    for (const auto& rec : history) {
        if (rec.actual_runtime_s <= 0) {
            if (warnings)
                warnings->push_back("skipping job '" + rec.request.job_id + "': non-positive runtime " +
                                    std::to_string(rec.actual_runtime_s));
            continue;
        }
        const std::int64_t mw = std::llround(rec.per_node_mean_w * 1000.0);
        if (mw < 0) throw DomainError("negative power in history for job '" + rec.request.job_id + "'");
        auto& t1 = model.by_user_app[{rec.request.user, rec.request.app_tag}];
        t1.sum_mw += mw;
        t1.count += 1;
        auto& t2 = model.by_user[rec.request.user];
        t2.sum_mw += mw;
        t2.count += 1;
        model.global.sum_mw += mw;
        model.global.count += 1;
    }
    return model;
}

Prediction predict(const PowerModel& model, const JobRequest& request) {
    if (request.nodes_requested < 1) throw DomainError("job must request at least one node");
    double per_node = model.default_w_per_node;
    Tier tier = Tier::Default;
    if (auto it = model.by_user_app.find({request.user, request.app_tag});
        it != model.by_user_app.end() && it->second.count > 0) {
        per_node = it->second.mean_w();
        tier = Tier::UserApp;
    } else if (auto it2 = model.by_user.find(request.user); it2 != model.by_user.end() && it2->second.count > 0) {
        per_node = it2->second.mean_w();
        tier = Tier::User;
    } else if (model.global.count > 0) {
        per_node = model.global.mean_w();
        tier = Tier::Global;
    }
    return Prediction{per_node * request.nodes_requested * model.safety_margin, tier};
}

EvalMetrics evaluate(const PowerModel& model, std::span<const JobRecord> test) {
    if (test.empty()) throw DomainError("empty test set");
    EvalMetrics m;
    double ape_sum = 0, se_sum = 0;
    for (const auto& rec : test) {
        if (rec.mean_power_w <= 0)
            throw DomainError("test record for job '" + rec.request.job_id + "' has non-positive power");
        Prediction p = predict(model, rec.request);
        ape_sum += std::abs(p.total_w - rec.mean_power_w) / rec.mean_power_w;
        se_sum += (p.total_w - rec.mean_power_w) * (p.total_w - rec.mean_power_w);
        m.tier_counts[p.tier] += 1;
    }
    m.mape = ape_sum / static_cast<double>(test.size());
    m.rmse = std::sqrt(se_sum / static_cast<double>(test.size()));
    return m;
}

std::string save_model(const PowerModel& model) {
    std::string out = "tier,key,mean_w_per_node,count\n";
    out += "default,," + fmt(model.default_w_per_node) + ",0\n";
    out += "margin,," + fmt(model.safety_margin) + ",0\n";
    if (model.global.count > 0)
        out += "tier3,," + fmt(model.global.mean_w()) + "," + std::to_string(model.global.count) + "\n";
    for (const auto& [user, stat] : model.by_user)
        out += "tier2," + user + "," + fmt(stat.mean_w()) + "," + std::to_string(stat.count) + "\n";
    for (const auto& [key, stat] : model.by_user_app)
        out += "tier1," + key.first + "|" + key.second + "," + fmt(stat.mean_w()) + "," +
               std::to_string(stat.count) + "\n";
    return out;
}

PowerModel load_model(const std::string& text) {
    PowerModel model;
    model.by_user_app.clear();
    model.by_user.clear();
    int line_no = 0;
    size_t pos = 0;
    bool saw_header = false;
    while (pos < text.size()) {
        size_t nl = text.find('\n', pos);
        std::string line = text.substr(pos, nl == std::string::npos ? text.size() - pos : nl - pos);
        pos = nl == std::string::npos ? text.size() : nl + 1;
        ++line_no;
        if (line.empty()) continue;
        if (!saw_header) {
            if (line != "tier,key,mean_w_per_node,count") throw ParseError("bad model header", line_no);
            saw_header = true;
            continue;
        }
        auto f = split_csv_line(line);
        if (f.size() != 4) throw ParseError("expected 4 fields", line_no);
        const double mean = parse_double_field(f[2], line_no);
        const std::int64_t count = parse_int_field(f[3], line_no);
        const std::int64_t sum_mw = std::llround(mean * 1000.0) * count;
        if (f[0] == "default") {
            model.default_w_per_node = mean;
        } else if (f[0] == "margin") {
            model.safety_margin = mean;
        } else if (f[0] == "tier3") {
            model.global = TierStat{sum_mw, count};
        } else if (f[0] == "tier2") {
            model.by_user[f[1]] = TierStat{sum_mw, count};
        } else if (f[0] == "tier1") {
            size_t bar = f[1].find('|');
            if (bar == std::string::npos) throw ParseError("tier1 key missing '|' separator", line_no);
            model.by_user_app[{f[1].substr(0, bar), f[1].substr(bar + 1)}] = TierStat{sum_mw, count};
        } else {
            throw ParseError("unknown tier '" + f[0] + "'", line_no);
        }
    }
    if (!saw_header) throw ParseError("empty model file");
    if (model.default_w_per_node <= 0) throw ParseError("model default power must be > 0");
    if (model.safety_margin < 1) throw ParseError("model safety margin must be >= 1");
    return model;
}

std::vector<JobRecord> parse_history_csv(const std::string& text) {
    std::vector<JobRecord> records;
    int line_no = 0;
    size_t pos = 0;
    bool saw_header = false;
    while (pos < text.size()) {
        size_t nl = text.find('\n', pos);
        std::string line = text.substr(pos, nl == std::string::npos ? text.size() - pos : nl - pos);
        pos = nl == std::string::npos ? text.size() : nl + 1;
        ++line_no;
        if (line.empty()) continue;
        if (!saw_header) {
            if (line != "job_id,user,app_tag,nodes,walltime_req_s,runtime_s,mean_power_w")
                throw ParseError("bad history header", line_no);
            saw_header = true;
            continue;
        }
        auto f = split_csv_line(line);
        if (f.size() != 7) throw ParseError("expected 7 fields", line_no);
        JobRecord rec;
        rec.request.job_id = f[0];
        rec.request.user = f[1];
        rec.request.app_tag = f[2];
        rec.request.nodes_requested = static_cast<int>(parse_int_field(f[3], line_no));
        rec.request.walltime_req_s = parse_int_field(f[4], line_no);
        rec.actual_runtime_s = parse_int_field(f[5], line_no);
        rec.mean_power_w = parse_double_field(f[6], line_no);
        if (rec.request.nodes_requested < 1) throw ParseError("nodes must be >= 1", line_no);
        rec.per_node_mean_w = rec.mean_power_w / rec.request.nodes_requested;
        records.push_back(std::move(rec));
    }
    if (!saw_header) throw ParseError("empty history file");
    return records;
}

std::string render_history_csv(std::span<const JobRecord> records) {
    std::string out = "job_id,user,app_tag,nodes,walltime_req_s,runtime_s,mean_power_w\n";
    for (const auto& r : records) {
        out += r.request.job_id + "," + r.request.user + "," + r.request.app_tag + "," +
               std::to_string(r.request.nodes_requested) + "," + std::to_string(r.request.walltime_req_s) +
               "," + std::to_string(r.actual_runtime_s) + "," + fmt(r.mean_power_w) + "\n";
    }
    return out;
}

}  // namespace davide::predictor
