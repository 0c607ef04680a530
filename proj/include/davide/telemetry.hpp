#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace davide::telemetry {

/* Fine-grain power sampling: a SAR ADC digitizes each channel at raw_rate_hz
 * and hardware block-averaging decimates the stream before it leaves the
 * node. All timestamps are integer nanoseconds. */

struct PowerSample {
    std::string node_id;
    std::string channel;      // "node" or a component channel like "gpu0"
    std::int64_t timestamp_ns = 0;
    std::int64_t power_uw = 0;  // >= 0

    bool operator==(const PowerSample&) const = default;
};

struct AdcSpec {
    int bits = 12;
    double full_scale_w = 4095.0;      // maps code 2^bits-1; default LSB = 1 W
    std::int64_t raw_rate_hz = 800000;
    int decimation_factor = 16;        // raw_rate_hz % factor == 0
    double noise_amplitude_w = 0.0;    // zero-mean uniform, added per raw sample

    double lsb_w() const { return full_scale_w / static_cast<double>((1ll << bits) - 1); }
    std::int64_t decimated_rate_hz() const { return raw_rate_hz / decimation_factor; }
    // Exact integer periods; validate() rejects specs where they don't divide.
    std::int64_t raw_period_ns() const { return 1000000000ll / raw_rate_hz; }
    std::int64_t decimated_period_ns() const {
        return decimation_factor * 1000000000ll / raw_rate_hz;
    }
    void validate() const;
};

struct Quantized {
    double value_w = 0;
    bool saturated = false;
};

/* Mid-tread quantization to the ADC grid: round(x / LSB) * LSB, clamped to
 * [0, full_scale_w]. Inputs above full scale clamp and set `saturated`;
 * small negative excursions (noise) clamp to 0 silently. */
Quantized quantize(double true_power_w, const AdcSpec& adc);

/* Block average: every `factor` consecutive raw values collapse to their
 * mean. Rejects partial blocks. Mean and (for power-of-two factors) total
 * energy are preserved exactly. */
std::vector<double> decimate(std::span<const double> raw, int factor);

/* Piecewise-constant power signal. Each step holds from its start until the
 * next one; the first value also extends backward. */
struct StepTrace {
    std::vector<std::pair<std::int64_t, double>> steps;  // (start_ns, watts), sorted

    static StepTrace constant(double watts) { return StepTrace{{{0, watts}}}; }
    double value_at(std::int64_t t_ns) const;
    // Exact time integral over [a, b) divided by (b - a).
    double mean_over(std::int64_t a_ns, std::int64_t b_ns) const;
};

/* Node-local clock against the global timebase.
 * Truth model: local(g) = g + offset_ns + drift_ppm * 1e-6 * (g - last_sync_ns).
 * offset_ns is the offset learned at the last sync; residual_bound_ns bounds
 * how far it may sit from the true offset. */
struct NodeClock {
    std::int64_t offset_ns = 0;
    double drift_ppm = 0.0;
    std::int64_t last_sync_ns = 0;      // global time of last sync
    std::int64_t residual_bound_ns = 0;

    std::int64_t local_of_global(std::int64_t global_ns) const;
    /* Maps a local reading back to global time, correcting offset and drift.
     * Monotone; rejects readings before the last sync (no backward
     * extrapolation). */
    std::int64_t to_global(std::int64_t local_ns) const;
};

/* One sync round at true global time `true_global_ns`. The new offset
 * estimate absorbs the drift accumulated since the previous sync and lands
 * within protocol_error_ns of the true offset (worst case is modeled, so
 * error 0 means exact recovery). */
NodeClock sync(const NodeClock& clock, std::int64_t true_global_ns, std::int64_t protocol_error_ns);

/* Full-rate simulation of one channel over [t0, t1): digitizes every raw
 * sample (plus seeded uniform noise), block-averages, and emits decimated
 * samples stamped with the *local* clock reading of each block start.
 * Window bounds must be multiples of the decimated period. Intended for
 * small windows; the run engine computes block means in closed form instead. */
std::vector<PowerSample> sample_window(const StepTrace& trace, std::int64_t t0_ns, std::int64_t t1_ns,
                                       const AdcSpec& adc, const NodeClock& clock,
                                       std::uint64_t noise_seed, const std::string& node_id,
                                       const std::string& channel);

}  // namespace davide::telemetry
