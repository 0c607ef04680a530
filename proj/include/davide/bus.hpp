#pragma once

#include <cstdint>
#include <deque>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "davide/telemetry.hpp"

namespace davide::bus {

/* In-process topic/subscriber bus. QoS 0, no retained messages: a publish
 * is copied into the queue of every subscription whose filter matches, in
 * publish order, and is dropped if nothing matches.
 *
 * Topic namespace used by the stack:
 *   davide/<rack>/<node>/<channel>/power   one line per decimated sample
 *   davide/jobs/<job_id>/energy            final per-job energy
 *
 * Sample payload (ASCII): "<timestamp_ns>;<power_uw>\n". */

struct Topic {
    std::vector<std::string> segments;

    /* Splits on '/'. Segments must be non-empty and free of '/', '+', '#',
     * whitespace and control bytes; the whole name tops out at 256 bytes. */
    static Topic parse(std::string_view text);
    std::string str() const;

    bool operator==(const Topic&) const = default;
};

struct TopicFilter {
    std::vector<std::string> segments;  // may contain "+"; "#" only last

    static TopicFilter parse(std::string_view text);
    std::string str() const;

    bool operator==(const TopicFilter&) const = default;
};

/* MQTT-style matching: '+' consumes exactly one segment, a trailing '#'
 * consumes zero or more. "a/#" therefore matches "a" as well as "a/b/c". */
bool topic_matches(const TopicFilter& filter, const Topic& topic);

struct Envelope {
    Topic topic;
    std::string payload;
    std::uint64_t publish_seq = 0;  // strictly increasing per bus
};

class Subscription {
public:
    explicit Subscription(TopicFilter f) : filter_(std::move(f)) {}

    const TopicFilter& filter() const { return filter_; }
    std::optional<Envelope> pop();
    size_t pending() const;

private:
    friend class Bus;
    TopicFilter filter_;
    mutable std::mutex mu_;
    std::deque<Envelope> queue_;
};

class Bus {
public:
    std::shared_ptr<Subscription> subscribe(const TopicFilter& filter);
    void unsubscribe(const std::shared_ptr<Subscription>& sub);
    // Returns the number of subscriptions that received the message.
    size_t publish(const Topic& topic, std::string_view payload);
    std::uint64_t next_seq() const { return seq_; }

private:
    mutable std::mutex mu_;
    std::vector<std::shared_ptr<Subscription>> subs_;
    std::uint64_t seq_ = 0;
};

// Wire codec for sample payloads. decode rejects anything but the exact
// format and reports the byte offset of the first bad character.
std::string encode_sample(const telemetry::PowerSample& s);
telemetry::PowerSample decode_sample(std::string_view payload);

// Topic builders for the namespace above.
Topic sample_topic(const std::string& rack, const std::string& node, const std::string& channel);
Topic job_energy_topic(const std::string& job_id);

}  // namespace davide::bus
