#include <doctest.h>

#include <random>
#include <string>
#include <vector>

#include "davide/bus.hpp"
#include "davide/errors.hpp"
#include "davide/rng.hpp"

using namespace davide;
using bus::Topic;
using bus::TopicFilter;

namespace {

/* Independent matcher: plain recursion over segments, no shortcuts. The
 * production matcher must agree with this on everything. */
bool slow_match(const std::vector<std::string>& f, size_t fi, const std::vector<std::string>& t,
                size_t ti) {
    if (fi == f.size()) return ti == t.size();
    if (f[fi] == "#") return true;  // trailing by construction
    if (ti == t.size()) return false;
    if (f[fi] != "+" && f[fi] != t[ti]) return false;
    return slow_match(f, fi + 1, t, ti + 1);
}

std::string random_segment(std::mt19937_64& g) {
    static const char* pool[] = {"a", "b", "ab", "davide", "node01", "x9"};
    return pool[rng::uniform_int(g, 0, 5)];
}

}  // namespace

TEST_CASE("topic: parse and print") {
    const auto t = Topic::parse("davide/rack1/node07/node/power");
    REQUIRE(t.segments.size() == 5);
    CHECK(t.segments[0] == "davide");
    CHECK(t.segments[4] == "power");
    CHECK(t.str() == "davide/rack1/node07/node/power");
    CHECK(bus::sample_topic("rack1", "node07", "node") == t);
    CHECK(bus::job_energy_topic("j42").str() == "davide/jobs/j42/energy");
}

TEST_CASE("topic: malformed names are rejected") {
    CHECK_THROWS_AS(Topic::parse(""), ParseError);
    CHECK_THROWS_AS(Topic::parse("a//b"), ParseError);
    CHECK_THROWS_AS(Topic::parse("/a"), ParseError);
    CHECK_THROWS_AS(Topic::parse("a/"), ParseError);
    CHECK_THROWS_AS(Topic::parse("a/+/b"), ParseError);   // wildcards are filter-only
    CHECK_THROWS_AS(Topic::parse("a/#"), ParseError);
    CHECK_THROWS_AS(Topic::parse("a b/c"), ParseError);
    CHECK_THROWS_AS(Topic::parse("a\tb"), ParseError);
    CHECK_THROWS_AS(Topic::parse(std::string(257, 'x')), ParseError);
    CHECK_NOTHROW(Topic::parse(std::string(256, 'x')));
}

TEST_CASE("filter: wildcard placement rules") {
    CHECK_NOTHROW(TopicFilter::parse("+/+/+"));
    CHECK_NOTHROW(TopicFilter::parse("#"));
    CHECK_NOTHROW(TopicFilter::parse("a/+/b/#"));
    CHECK_THROWS_AS(TopicFilter::parse("a/#/b"), ParseError);   // '#' must be last
    CHECK_THROWS_AS(TopicFilter::parse("a/b#"), ParseError);    // wildcards stand alone
    CHECK_THROWS_AS(TopicFilter::parse("a+/b"), ParseError);
    CHECK_THROWS_AS(TopicFilter::parse("a/++"), ParseError);
    CHECK(TopicFilter::parse("a/+/#").str() == "a/+/#");
}

TEST_CASE("matching: hand-picked semantics") {
    auto matches = [](const char* f, const char* t) {
        return bus::topic_matches(TopicFilter::parse(f), Topic::parse(t));
    };
    CHECK(matches("a/b", "a/b"));
    CHECK_FALSE(matches("a/b", "a/c"));
    CHECK_FALSE(matches("a/b", "a/b/c"));
    CHECK(matches("a/+", "a/b"));
    CHECK_FALSE(matches("+", "a/b"));          // '+' is exactly one segment
    CHECK(matches("#", "a"));
    CHECK(matches("#", "a/b/c/d"));
    CHECK(matches("a/#", "a"));                // trailing '#' covers zero segments
    CHECK(matches("a/#", "a/b/c"));
    CHECK_FALSE(matches("a/#", "b"));
    CHECK(matches("a/+/c", "a/x/c"));
    CHECK_FALSE(matches("a/+/c", "a/x/d"));
    CHECK(matches("davide/+/+/node/power", "davide/rack1/node07/node/power"));
    CHECK_FALSE(matches("davide/+/+/node/power", "davide/jobs/j1/energy"));
}

TEST_CASE("matching: equivalence with the recursive reference") {
    std::mt19937_64 g = rng::stream(2024, rng::kNoise);
    int matched = 0;
    for (int i = 0; i < 20000; ++i) {
        // Build a random valid filter...
        std::vector<std::string> fseg;
        const int fn = static_cast<int>(rng::uniform_int(g, 1, 4));
        for (int k = 0; k < fn; ++k) {
            const auto roll = rng::uniform_int(g, 0, 9);
            if (roll == 0) fseg.push_back("+");
            else fseg.push_back(random_segment(g));
        }
        if (rng::uniform_int(g, 0, 3) == 0) fseg.push_back("#");
        // ...and a random topic of similar shape so collisions are common.
        std::vector<std::string> tseg;
        const int tn = static_cast<int>(rng::uniform_int(g, 1, 5));
        for (int k = 0; k < tn; ++k) tseg.push_back(random_segment(g));

        TopicFilter f{fseg};
        Topic t{tseg};
        const bool fast = bus::topic_matches(f, t);
        const bool slow = slow_match(fseg, 0, tseg, 0);
        CHECK(fast == slow);
        matched += fast;
    }
    CHECK(matched > 100);  // the generator must actually produce hits
}

TEST_CASE("bus: delivery, ordering, no retained messages") {
    bus::Bus b;
    auto all = b.subscribe(TopicFilter::parse("davide/#"));
    auto node_only = b.subscribe(TopicFilter::parse("davide/+/+/node/power"));

    CHECK(b.publish(Topic::parse("davide/rack1/n1/node/power"), "1;2\n") == 2);
    CHECK(b.publish(Topic::parse("davide/jobs/j1/energy"), "3.5") == 1);
    CHECK(b.publish(Topic::parse("other/place"), "x") == 0);  // dropped, nobody listens

    CHECK(all->pending() == 2);
    CHECK(node_only->pending() == 1);

    auto first = all->pop();
    auto second = all->pop();
    REQUIRE(first);
    REQUIRE(second);
    CHECK(first->topic.str() == "davide/rack1/n1/node/power");
    CHECK(second->topic.str() == "davide/jobs/j1/energy");
    CHECK(first->publish_seq < second->publish_seq);
    CHECK_FALSE(all->pop().has_value());

    // Late subscriber sees nothing that was published before it existed.
    auto late = b.subscribe(TopicFilter::parse("#"));
    CHECK(late->pending() == 0);

    b.unsubscribe(node_only);
    CHECK(b.publish(Topic::parse("davide/rack1/n1/node/power"), "5;6\n") == 2);  // all + late
    CHECK(node_only->pending() == 1);  // unchanged after unsubscribe
}

TEST_CASE("wire: encode and decode are exact inverses") {
    telemetry::PowerSample s;
    s.timestamp_ns = 123456789;
    s.power_uw = 1500000000;
    CHECK(bus::encode_sample(s) == "123456789;1500000000\n");
    const auto back = bus::decode_sample("123456789;1500000000\n");
    CHECK(back.timestamp_ns == 123456789);
    CHECK(back.power_uw == 1500000000);

    std::mt19937_64 g = rng::stream(7, rng::kNoise);
    for (int i = 0; i < 20000; ++i) {
        telemetry::PowerSample x;
        x.timestamp_ns = rng::uniform_int(g, INT64_MIN / 2, INT64_MAX / 2);
        x.power_uw = rng::uniform_int(g, 0, INT64_MAX / 2);
        const auto y = bus::decode_sample(bus::encode_sample(x));
        CHECK(y.timestamp_ns == x.timestamp_ns);
        CHECK(y.power_uw == x.power_uw);
    }
}

TEST_CASE("wire: decoder rejects everything but the exact format") {
    CHECK_THROWS_AS(bus::decode_sample(""), ParseError);
    CHECK_THROWS_AS(bus::decode_sample("123\n"), ParseError);            // no ';'
    CHECK_THROWS_AS(bus::decode_sample("123;456"), ParseError);          // no newline
    CHECK_THROWS_AS(bus::decode_sample("123;456\nx"), ParseError);       // trailing bytes
    CHECK_THROWS_AS(bus::decode_sample("12a;456\n"), ParseError);
    CHECK_THROWS_AS(bus::decode_sample("123;-456\n"), ParseError);       // negative power
    CHECK_THROWS_AS(bus::decode_sample("123; 456\n"), ParseError);       // no padding allowed
    CHECK_THROWS_AS(bus::decode_sample(";456\n"), ParseError);
    CHECK_THROWS_AS(bus::decode_sample("123;\n"), ParseError);
    CHECK_THROWS_AS(bus::decode_sample("99999999999999999999;1\n"), ParseError);  // overflow
    CHECK_THROWS_WITH_AS(bus::decode_sample("123;45x6\n"), doctest::Contains("byte"), ParseError);
    // Negative timestamps are legitimate (pre-epoch local clocks).
    CHECK(bus::decode_sample("-5;7\n").timestamp_ns == -5);
}
