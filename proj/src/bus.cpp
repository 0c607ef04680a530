#include "davide/bus.hpp"

#include <algorithm>
#include <cctype>

#include "davide/errors.hpp"

namespace davide::bus {

namespace {

std::vector<std::string> split_segments(std::string_view text, bool is_filter) {
    if (text.empty()) throw ParseError("empty topic");
    if (text.size() > 256) throw ParseError("topic longer than 256 bytes");
    std::vector<std::string> segs;
    size_t pos = 0;
    while (true) {
        size_t slash = text.find('/', pos);
        std::string_view seg = text.substr(pos, slash == std::string_view::npos ? text.size() - pos : slash - pos);
        if (seg.empty()) throw ParseError("empty topic segment", static_cast<long>(pos) + 1);
        bool is_plus = seg == "+";
        bool is_hash = seg == "#";
        for (size_t i = 0; i < seg.size(); ++i) {
            char c = seg[i];
            if (c == '+' || c == '#') {
                if (!is_filter || seg.size() != 1)
                    throw ParseError("wildcard must stand alone in its segment", static_cast<long>(pos + i) + 1);
            }
            if (std::isspace(static_cast<unsigned char>(c)) || std::iscntrl(static_cast<unsigned char>(c)))
                throw ParseError("whitespace or control byte in topic", static_cast<long>(pos + i) + 1);
        }
        if (!is_filter && (is_plus || is_hash))
            throw ParseError("wildcard in topic name", static_cast<long>(pos) + 1);
        if (is_hash && slash != std::string_view::npos)
            throw ParseError("'#' is only valid as the last segment", static_cast<long>(pos) + 1);
        segs.emplace_back(seg);
        if (slash == std::string_view::npos) break;
        pos = slash + 1;
        if (pos >= text.size()) throw ParseError("trailing '/'", static_cast<long>(text.size()));
    }
    return segs;
}

std::string join(const std::vector<std::string>& segs) {
    std::string out;
    for (size_t i = 0; i < segs.size(); ++i) {
        if (i) out += '/';
        out += segs[i];
    }
    return out;
}

}  // namespace

Topic Topic::parse(std::string_view text) { return Topic{split_segments(text, false)}; }
std::string Topic::str() const { return join(segments); }

TopicFilter TopicFilter::parse(std::string_view text) { return TopicFilter{split_segments(text, true)}; }
std::string TopicFilter::str() const { return join(segments); }

bool topic_matches(const TopicFilter& filter, const Topic& topic) {
    const auto& f = filter.segments;
    const auto& t = topic.segments;
    size_t i = 0;
    for (; i < f.size(); ++i) {
        if (f[i] == "#") return true;  // trailing by construction; matches zero or more
        if (i >= t.size()) return false;
        if (f[i] != "+" && f[i] != t[i]) return false;
    }
    return i == t.size();
}

std::optional<Envelope> Subscription::pop() {
    std::lock_guard lock(mu_);
    if (queue_.empty()) return std::nullopt;
    Envelope e = std::move(queue_.front());
    queue_.pop_front();
    return e;
}

size_t Subscription::pending() const {
    std::lock_guard lock(mu_);
    return queue_.size();
}

std::shared_ptr<Subscription> Bus::subscribe(const TopicFilter& filter) {
    auto sub = std::make_shared<Subscription>(filter);
    std::lock_guard lock(mu_);
    subs_.push_back(sub);
    return sub;
}

void Bus::unsubscribe(const std::shared_ptr<Subscription>& sub) {
    std::lock_guard lock(mu_);
    std::erase(subs_, sub);
}

size_t Bus::publish(const Topic& topic, std::string_view payload) {
    std::lock_guard lock(mu_);
    const std::uint64_t seq = seq_++;
    size_t delivered = 0;
    for (const auto& sub : subs_) {
        if (!topic_matches(sub->filter_, topic)) continue;
        std::lock_guard qlock(sub->mu_);
        sub->queue_.push_back(Envelope{topic, std::string(payload), seq});
        ++delivered;
    }
    return delivered;
}

std::string encode_sample(const telemetry::PowerSample& s) {
    return std::to_string(s.timestamp_ns) + ";" + std::to_string(s.power_uw) + "\n";
}

telemetry::PowerSample decode_sample(std::string_view payload) {
    auto fail = [&](const char* why, size_t at) {
        throw ParseError(std::string("bad sample payload: ") + why + " at byte " + std::to_string(at));
    };
    size_t i = 0;
    auto parse_int = [&](bool allow_sign) {
        size_t begin = i;
        if (allow_sign && i < payload.size() && payload[i] == '-') ++i;
        size_t digits_at = i;
        while (i < payload.size() && payload[i] >= '0' && payload[i] <= '9') ++i;
        if (i == digits_at) fail("expected digit", i);
        if (i - digits_at > 19) fail("integer too long", begin);
        std::int64_t v = 0;
        bool neg = payload[begin] == '-';
        for (size_t k = digits_at; k < i; ++k) {
            if (v > (INT64_MAX - (payload[k] - '0')) / 10) fail("integer overflow", begin);
            v = v * 10 + (payload[k] - '0');
        }
        return neg ? -v : v;
    };

    telemetry::PowerSample s;
    s.timestamp_ns = parse_int(true);
    if (i >= payload.size() || payload[i] != ';') fail("expected ';'", i);
    ++i;
    if (i < payload.size() && payload[i] == '-') fail("negative power", i);
    s.power_uw = parse_int(false);
    if (i >= payload.size() || payload[i] != '\n') fail("expected trailing newline", i);
    ++i;
    if (i != payload.size()) fail("trailing bytes", i);
    return s;
}

Topic sample_topic(const std::string& rack, const std::string& node, const std::string& channel) {
    return Topic::parse("davide/" + rack + "/" + node + "/" + channel + "/power");
}

Topic job_energy_topic(const std::string& job_id) {
    return Topic::parse("davide/jobs/" + job_id + "/energy");
}

}  // namespace davide::bus
