#include <doctest.h>

#include "davide/errors.hpp"
#include "davide/manifest.hpp"

using namespace davide;

namespace {

manifest::RunManifest sample() {
    manifest::RunManifest m;
    m.config_path = "configs/default.ini";
    m.config_hash = manifest::hash_hex("[cluster]\nnodes = 45\n");
    m.workload = "synth:100";
    m.seed = 42;
    m.out_dir = "out/run1";
    return m;
}

}  // namespace

TEST_CASE("manifest: render then parse is the identity") {
    const auto m = sample();
    const auto text = manifest::render_manifest(m);
    const auto back = manifest::parse_manifest(text);
    CHECK(back.artifact_version == m.artifact_version);
    CHECK(back.config_path == m.config_path);
    CHECK(back.config_hash == m.config_hash);
    CHECK(back.workload == m.workload);
    CHECK(back.seed == m.seed);
    CHECK(back.out_dir == m.out_dir);
    CHECK(manifest::render_manifest(back) == text);
}

TEST_CASE("manifest: hash is 16 lowercase hex digits and input sensitive") {
    const auto h1 = manifest::hash_hex("abc");
    const auto h2 = manifest::hash_hex("abd");
    CHECK(h1.size() == 16);
    CHECK(h1.find_first_not_of("0123456789abcdef") == std::string::npos);
    CHECK(h1 != h2);
    CHECK(h1 == manifest::hash_hex("abc"));
    CHECK(manifest::hash_hex("").size() == 16);
}

TEST_CASE("manifest: verify_config_hash accepts the recorded bytes only") {
    auto m = sample();
    const std::string bytes = "[cluster]\nnodes = 45\n";
    CHECK_NOTHROW(manifest::verify_config_hash(m, bytes));
    CHECK_THROWS_WITH_AS(manifest::verify_config_hash(m, bytes + " "),
                         doctest::Contains("config hash mismatch"), DomainError);
}

TEST_CASE("manifest: seed survives the full uint64 range") {
    auto m = sample();
    m.seed = 18446744073709551615ull;
    const auto back = manifest::parse_manifest(manifest::render_manifest(m));
    CHECK(back.seed == 18446744073709551615ull);
}

TEST_CASE("manifest: malformed inputs are rejected with line numbers") {
    const auto good = manifest::render_manifest(sample());

    auto swap = [&](const std::string& from, const std::string& to) {
        auto t = good;
        const auto pos = t.find(from);
        REQUIRE(pos != std::string::npos);
        t.replace(pos, from.size(), to);
        return t;
    };

    CHECK_THROWS_WITH_AS(manifest::parse_manifest("[other]\nseed = 1\n"),
                         doctest::Contains("missing [run]"), ParseError);
    CHECK_THROWS_WITH_AS(manifest::parse_manifest(swap("config_hash = ", "config_hash = ZZ")),
                         doctest::Contains("16 lowercase hex"), ParseError);
    // Uppercase hex is not the rendered form.
    CHECK_THROWS_WITH_AS(
        manifest::parse_manifest(swap(sample().config_hash, "ABCDEF0123456789")),
        doctest::Contains("16 lowercase hex"), ParseError);
    CHECK_THROWS_WITH_AS(manifest::parse_manifest(swap("synth:100", "jobs:100")),
                         doctest::Contains("swf:<path> or synth:<n>"), ParseError);
    CHECK_THROWS_WITH_AS(manifest::parse_manifest(swap("seed = 42", "seed = -3")),
                         doctest::Contains("unsigned integer"), ParseError);
    CHECK_THROWS_WITH_AS(manifest::parse_manifest(swap("seed = 42", "seed = 42x")),
                         doctest::Contains("unsigned integer"), ParseError);
    CHECK_THROWS_WITH_AS(manifest::parse_manifest(swap("seed = 42", "seed = 99999999999999999999")),
                         doctest::Contains("unsigned integer"), ParseError);
    CHECK_THROWS_WITH_AS(manifest::parse_manifest(good + "extra = 1\n"),
                         doctest::Contains("unknown key 'extra'"), ParseError);
    CHECK_THROWS_WITH_AS(manifest::parse_manifest(swap("seed = 42\n", "")),
                         doctest::Contains("required keys"), ParseError);

    // The offending line is reported.
    try {
        manifest::parse_manifest(swap("synth:100", "jobs:100"));
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.where() == 5);  // [run], version, config, hash, then workload
    }
}
