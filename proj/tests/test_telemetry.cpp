#include <doctest.h>

#include <cmath>
#include <random>

#include "davide/errors.hpp"
#include "davide/rng.hpp"
#include "davide/telemetry.hpp"

using namespace davide;
using telemetry::AdcSpec;
using telemetry::StepTrace;

TEST_CASE("adc: default spec matches the sampling chain figures") {
    AdcSpec adc;
    adc.validate();
    CHECK(adc.lsb_w() == 1.0);  // 4095 W over 12 bits
    CHECK(adc.decimated_rate_hz() == 50000);
    CHECK(adc.raw_period_ns() == 1250);
    CHECK(adc.decimated_period_ns() == 20000);
}

TEST_CASE("adc: spec validation") {
    AdcSpec adc;
    adc.decimation_factor = 7;  // 800000 % 7 != 0
    CHECK_THROWS_AS(adc.validate(), DomainError);
    adc = AdcSpec{};
    adc.raw_rate_hz = 1700000;  // above the converter's reach
    CHECK_THROWS_AS(adc.validate(), DomainError);
    adc = AdcSpec{};
    adc.raw_rate_hz = 300000;  // 1e9 % 300000 != 0: no integer raw period
    CHECK_THROWS_AS(adc.validate(), DomainError);
    adc = AdcSpec{};
    adc.bits = 0;
    CHECK_THROWS_AS(adc.validate(), DomainError);
    adc = AdcSpec{};
    adc.full_scale_w = 0;
    CHECK_THROWS_AS(adc.validate(), DomainError);
}

TEST_CASE("quantize: grid rounding, clamping, saturation flag") {
    AdcSpec adc;  // LSB exactly 1 W
    CHECK(telemetry::quantize(1234.0, adc).value_w == 1234.0);
    CHECK(telemetry::quantize(1234.4, adc).value_w == 1234.0);
    CHECK(telemetry::quantize(1234.6, adc).value_w == 1235.0);
    CHECK_FALSE(telemetry::quantize(4095.0, adc).saturated);
    const auto over = telemetry::quantize(4100.0, adc);
    CHECK(over.value_w == 4095.0);
    CHECK(over.saturated);
    // Negative noise excursions clamp silently.
    const auto neg = telemetry::quantize(-0.3, adc);
    CHECK(neg.value_w == 0.0);
    CHECK_FALSE(neg.saturated);
    // Idempotence: a quantized value is a fixed point.
    std::mt19937_64 g(7);
    for (int i = 0; i < 1000; ++i) {
        const double x = rng::uniform_real(g, 0, 4095);
        const double q = telemetry::quantize(x, adc).value_w;
        CHECK(telemetry::quantize(q, adc).value_w == q);
        CHECK(std::abs(q - x) <= 0.5 + 1e-12);
    }
}

TEST_CASE("quantize: coarse converters round to their own grid") {
    AdcSpec adc;
    adc.bits = 8;  // LSB = 4095/255 ~ 16.06 W
    const double lsb = adc.lsb_w();
    const auto q = telemetry::quantize(1000.0, adc);
    CHECK(q.value_w == doctest::Approx(std::round(1000.0 / lsb) * lsb).epsilon(1e-12));
}

TEST_CASE("decimate: block means against a wide-accumulator oracle") {
    std::mt19937_64 g(42);
    std::vector<double> raw(16 * 257);
    for (auto& x : raw) x = rng::uniform_real(g, 0, 4095);
    const auto out = telemetry::decimate(raw, 16);
    REQUIRE(out.size() == 257);
    for (size_t b = 0; b < out.size(); ++b) {
        long double acc = 0;
        for (int i = 0; i < 16; ++i) acc += raw[b * 16 + i];
        const double oracle = static_cast<double>(acc / 16);
        CHECK(std::abs(out[b] - oracle) <= 1e-12 * std::max(1.0, std::abs(oracle)));
    }
    // Whole-stream mean is preserved.
    long double sum_raw = 0, sum_dec = 0;
    for (double x : raw) sum_raw += x;
    for (double x : out) sum_dec += x;
    CHECK(std::abs(static_cast<double>(sum_raw / raw.size() - sum_dec / out.size())) < 1e-9);
}

TEST_CASE("decimate: partial blocks are rejected") {
    std::vector<double> raw(31, 1.0);
    CHECK_THROWS_AS(telemetry::decimate(raw, 16), DomainError);
    CHECK_THROWS_AS(telemetry::decimate(raw, 0), DomainError);
    CHECK(telemetry::decimate(std::vector<double>{}, 16).empty());
}

TEST_CASE("step trace: value and exact means") {
    StepTrace tr{{{0, 100.0}, {1000, 300.0}, {3000, 50.0}}};
    CHECK(tr.value_at(-5) == 100.0);  // first value extends backward
    CHECK(tr.value_at(0) == 100.0);
    CHECK(tr.value_at(999) == 100.0);
    CHECK(tr.value_at(1000) == 300.0);
    CHECK(tr.value_at(5000) == 50.0);
    CHECK(tr.mean_over(0, 1000) == 100.0);
    CHECK(tr.mean_over(0, 2000) == 200.0);
    // 1000ns@100 + 2000ns@300 + 1000ns@50 over 4000ns
    CHECK(tr.mean_over(0, 4000) == doctest::Approx((100e3 + 600e3 + 50e3) / 4000).epsilon(1e-15));
    CHECK_THROWS_AS(tr.mean_over(10, 10), DomainError);
    CHECK_THROWS_AS(StepTrace{}.mean_over(0, 10), DomainError);
}

TEST_CASE("clock: global/local round trip within 1 ns") {
    std::mt19937_64 g(9);
    for (int i = 0; i < 2000; ++i) {
        telemetry::NodeClock clk;
        clk.offset_ns = rng::uniform_int(g, -1000000, 1000000);
        clk.drift_ppm = rng::uniform_real(g, -200, 200);
        clk.last_sync_ns = rng::uniform_int(g, 0, 1000000);
        const std::int64_t global = clk.last_sync_ns + rng::uniform_int(g, 0, 3600ll * 1000000000);
        const auto local = clk.local_of_global(global);
        const auto back = clk.to_global(local);
        CHECK(std::llabs(back - global) <= 1);
    }
}

TEST_CASE("clock: monotone mapping under drift") {
    telemetry::NodeClock clk;
    clk.drift_ppm = 150;
    clk.offset_ns = 12345;
    std::int64_t prev_local = clk.local_of_global(0);
    for (std::int64_t gN = 1; gN <= 2000; ++gN) {
        const auto local = clk.local_of_global(gN * 1000000);
        CHECK(local > prev_local);
        prev_local = local;
    }
    CHECK_THROWS_AS(clk.to_global(clk.local_of_global(clk.last_sync_ns) - 10), DomainError);
}

TEST_CASE("clock: sync absorbs drift and bounds the residual") {
    telemetry::NodeClock clk;
    clk.offset_ns = 5000;
    clk.drift_ppm = 100;  // 100 ns per ms
    // One second after the epoch sync the true offset grew by 100000 ns.
    auto synced = telemetry::sync(clk, 1000000000, 0);
    CHECK(synced.offset_ns == 5000 + 100000);
    CHECK(synced.last_sync_ns == 1000000000);
    CHECK(synced.residual_bound_ns == 0);
    // Worst-case protocol error lands exactly at the bound.
    auto rough = telemetry::sync(clk, 1000000000, 750);
    CHECK(std::llabs(rough.offset_ns - synced.offset_ns) == 750);
    CHECK(rough.residual_bound_ns == 750);
    // After an exact sync, local_of_global at the sync instant uses the new offset.
    CHECK(synced.local_of_global(1000000000) == 1000000000 + synced.offset_ns);
}

TEST_CASE("sample window: constant power, ideal clock") {
    AdcSpec adc;
    telemetry::NodeClock ideal;
    const auto samples = telemetry::sample_window(StepTrace::constant(1000.0), 0, 200000, adc,
                                                  ideal, 1, "n01", "node");
    REQUIRE(samples.size() == 10);  // 200 us / 20 us blocks
    for (size_t i = 0; i < samples.size(); ++i) {
        CHECK(samples[i].power_uw == 1000000000);
        CHECK(samples[i].timestamp_ns == static_cast<std::int64_t>(i) * 20000);
        CHECK(samples[i].node_id == "n01");
        CHECK(samples[i].channel == "node");
    }
}

TEST_CASE("sample window: step inside a block matches the trace mean") {
    AdcSpec adc;
    telemetry::NodeClock ideal;
    // Step from 500 W to 1500 W at 10 us: block 0 averages the two halves.
    StepTrace tr{{{0, 500.0}, {10000, 1500.0}}};
    const auto samples = telemetry::sample_window(tr, 0, 40000, adc, ideal, 1, "n", "node");
    REQUIRE(samples.size() == 2);
    CHECK(samples[0].power_uw == 1000000000);  // (500+1500)/2, exactly on the grid
    CHECK(samples[1].power_uw == 1500000000);
}

TEST_CASE("sample window: local timestamps come from the clock") {
    AdcSpec adc;
    telemetry::NodeClock clk;
    clk.offset_ns = 777;
    const auto samples =
        telemetry::sample_window(StepTrace::constant(100.0), 0, 40000, adc, clk, 1, "n", "node");
    REQUIRE(samples.size() == 2);
    CHECK(samples[0].timestamp_ns == 777);
    CHECK(samples[1].timestamp_ns == 20777);
}

TEST_CASE("sample window: noise stays within amplitude and is seed-stable") {
    AdcSpec adc;
    adc.noise_amplitude_w = 5.0;
    telemetry::NodeClock ideal;
    const auto a = telemetry::sample_window(StepTrace::constant(2000.0), 0, 1000000, adc, ideal,
                                            42, "n", "node");
    const auto b = telemetry::sample_window(StepTrace::constant(2000.0), 0, 1000000, adc, ideal,
                                            42, "n", "node");
    const auto c = telemetry::sample_window(StepTrace::constant(2000.0), 0, 1000000, adc, ideal,
                                            43, "n", "node");
    CHECK(a == b);
    CHECK(a != c);
    for (const auto& s : a) {
        // Block mean of +-5 W noise can never leave the +-5 W band around truth.
        CHECK(s.power_uw >= 1995000000);
        CHECK(s.power_uw <= 2005000000);
    }
    CHECK_THROWS_AS(telemetry::sample_window(StepTrace::constant(1.0), 0, 12345, adc, ideal, 1,
                                             "n", "node"),
                    DomainError);
}
