#include "davide/telemetry.hpp"

#include <algorithm>
#include <cmath>

#include "davide/errors.hpp"
#include "davide/rng.hpp"

namespace davide::telemetry {

void AdcSpec::validate() const {
    if (bits < 1 || bits > 30) throw DomainError("adc bits out of range");
    if (full_scale_w <= 0) throw DomainError("adc full scale must be > 0");
    if (raw_rate_hz < 1) throw DomainError("adc raw rate must be >= 1");
    if (raw_rate_hz > 1600000) throw DomainError("adc raw rate above 1.6 MS/s hardware limit");
    if (decimation_factor < 1) throw DomainError("decimation factor must be >= 1");
    if (raw_rate_hz % decimation_factor != 0)
        throw DomainError("raw rate must be a multiple of the decimation factor");
    if (1000000000ll % raw_rate_hz != 0)
        throw DomainError("raw rate must divide 1e9 ns for integer sample periods");
    if (noise_amplitude_w < 0) throw DomainError("noise amplitude must be >= 0");
}

Quantized quantize(double true_power_w, const AdcSpec& adc) {
    const double lsb = adc.lsb_w();
    Quantized q;
    if (true_power_w >= adc.full_scale_w) {
        q.value_w = adc.full_scale_w;
        q.saturated = true_power_w > adc.full_scale_w;
        return q;
    }
    if (true_power_w <= 0) return q;  // noise can dip below zero; clamp quietly
    q.value_w = std::round(true_power_w / lsb) * lsb;
    return q;
}

std::vector<double> decimate(std::span<const double> raw, int factor) {
    if (factor < 1) throw DomainError("decimation factor must be >= 1");
    if (raw.size() % static_cast<size_t>(factor) != 0)
        throw DomainError("raw block of " + std::to_string(raw.size()) +
                          " samples is not a multiple of factor " + std::to_string(factor));
    std::vector<double> out;
    out.reserve(raw.size() / factor);
    for (size_t i = 0; i < raw.size(); i += factor) {
        double sum = 0;
        for (size_t j = 0; j < static_cast<size_t>(factor); ++j) sum += raw[i + j];
        out.push_back(sum / factor);
    }
    return out;
}

double StepTrace::value_at(std::int64_t t_ns) const {
    if (steps.empty()) throw DomainError("empty trace");
    auto it = std::upper_bound(steps.begin(), steps.end(), t_ns,
                               [](std::int64_t t, const auto& s) { return t < s.first; });
    if (it == steps.begin()) return steps.front().second;
    return std::prev(it)->second;
}

double StepTrace::mean_over(std::int64_t a_ns, std::int64_t b_ns) const {
    if (steps.empty()) throw DomainError("empty trace");
    if (b_ns <= a_ns) throw DomainError("empty interval");
    double acc = 0;  // watt-nanoseconds
    std::int64_t cursor = a_ns;
    auto it = std::upper_bound(steps.begin(), steps.end(), a_ns,
                               [](std::int64_t t, const auto& s) { return t < s.first; });
    double value = it == steps.begin() ? steps.front().second : std::prev(it)->second;
    while (cursor < b_ns) {
        std::int64_t next = it != steps.end() ? std::min(it->first, b_ns) : b_ns;
        acc += value * static_cast<double>(next - cursor);
        cursor = next;
        if (it != steps.end() && next == it->first) {
            value = it->second;
            ++it;
        }
    }
    return acc / static_cast<double>(b_ns - a_ns);
}

std::int64_t NodeClock::local_of_global(std::int64_t global_ns) const {
    const double acc = drift_ppm * 1e-6 * static_cast<double>(global_ns - last_sync_ns);
    return global_ns + offset_ns + std::llround(acc);
}

std::int64_t NodeClock::to_global(std::int64_t local_ns) const {
    const std::int64_t local_at_sync = last_sync_ns + offset_ns;
    if (local_ns < local_at_sync)
        throw DomainError("local timestamp predates last sync; cannot extrapolate backward");
    const double dl = static_cast<double>(local_ns - local_at_sync);
    const double dg = dl / (1.0 + drift_ppm * 1e-6);
    return last_sync_ns + std::llround(dg);
}

NodeClock sync(const NodeClock& clock, std::int64_t true_global_ns, std::int64_t protocol_error_ns) {
    if (protocol_error_ns < 0) throw DomainError("protocol error bound must be >= 0");
    if (true_global_ns < clock.last_sync_ns) throw DomainError("sync time precedes last sync");
    const double acc = clock.drift_ppm * 1e-6 * static_cast<double>(true_global_ns - clock.last_sync_ns);
    const std::int64_t true_offset = clock.offset_ns + std::llround(acc);
    NodeClock next = clock;
    next.offset_ns = true_offset + protocol_error_ns;  // worst-case estimation error
    next.last_sync_ns = true_global_ns;
    next.residual_bound_ns = protocol_error_ns;
    return next;
}

std::vector<PowerSample> sample_window(const StepTrace& trace, std::int64_t t0_ns, std::int64_t t1_ns,
                                       const AdcSpec& adc, const NodeClock& clock,
                                       std::uint64_t noise_seed, const std::string& node_id,
                                       const std::string& channel) {
    adc.validate();
    const std::int64_t block_ns = adc.decimated_period_ns();
    const std::int64_t raw_ns = adc.raw_period_ns();
    if (t1_ns < t0_ns) throw DomainError("window end precedes start");
    if ((t1_ns - t0_ns) % block_ns != 0)
        throw DomainError("window must be a whole number of decimated periods");

    const std::int64_t blocks = (t1_ns - t0_ns) / block_ns;
    std::vector<PowerSample> out;
    out.reserve(static_cast<size_t>(blocks));
    auto gen = rng::stream(noise_seed, rng::kNoise);
    const bool noisy = adc.noise_amplitude_w > 0;

    for (std::int64_t b = 0; b < blocks; ++b) {
        const std::int64_t start = t0_ns + b * block_ns;
        double acc = 0;
        for (int j = 0; j < adc.decimation_factor; ++j) {
            const std::int64_t rs = start + j * raw_ns;
            double v = trace.mean_over(rs, rs + raw_ns);
            if (noisy) v += rng::uniform_real(gen, -adc.noise_amplitude_w, adc.noise_amplitude_w);
            acc += quantize(v, adc).value_w;
        }
        const double mean_w = acc / adc.decimation_factor;
        PowerSample s;
        s.node_id = node_id;
        s.channel = channel;
        s.timestamp_ns = clock.local_of_global(start);
        s.power_uw = std::llround(mean_w * 1e6);
        out.push_back(std::move(s));
    }
    return out;
}

}  // namespace davide::telemetry
