#include "twinet/link/bench.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

namespace twinet::link {

namespace {

constexpr std::string_view kR2T = "r2t";
constexpr std::string_view kT2R = "t2r";

std::string_view tag(Direction d) { return d == Direction::RealToTwin ? kR2T : kT2R; }

double one_sample(LinkEndpoint& sender, LinkEndpoint& receiver, Direction d, const std::vector<std::uint8_t>& payload,
                  std::chrono::milliseconds timeout) {
    const std::string ping = topics::bench_ping(tag(d));
    const std::string pong = topics::bench_pong(tag(d));

    const auto sent = sender.publish(ping, EnvelopeKind::BenchPing, payload);
    auto got = receiver.wait_for(ping, timeout);
    if (!got) throw LinkError(fmt::format("bench: no ping of {} B within {} ms", payload.size(), timeout.count()));
    if (got->envelope.seq != sent.seq) {
        throw LinkError(fmt::format("bench: expected ping seq {}, got {}", sent.seq, got->envelope.seq));
    }
    const double latency_ms = static_cast<double>(got->received_at_us - got->envelope.sent_at) / 1000.0;

    receiver.publish(pong, EnvelopeKind::BenchPong, {0});
    if (!sender.wait_for(pong, timeout)) throw LinkError("bench: pong lost");
    return latency_ms;
}

}  // namespace

std::string_view to_string(Direction d) noexcept { return d == Direction::RealToTwin ? "real_to_twin" : "twin_to_real"; }

double percentile(std::vector<double> samples, double q) {
    if (samples.empty()) return 0.0;
    std::sort(samples.begin(), samples.end());
    const auto rank = static_cast<std::size_t>(std::ceil(q * static_cast<double>(samples.size())));
    return samples[std::clamp<std::size_t>(rank, 1, samples.size()) - 1];
}

LatencyReport summarize(std::size_t payload_size, Direction direction, const std::vector<double>& raw_ms) {
    LatencyReport r;
    r.payload_size = payload_size;
    r.direction = direction;
    for (double v : raw_ms) {
        if (v < 0.0) {
            ++r.discarded_negative;
        } else {
            r.samples_ms.push_back(v);
        }
    }
    if (!r.samples_ms.empty()) {
        r.mean_ms = std::accumulate(r.samples_ms.begin(), r.samples_ms.end(), 0.0) /
                    static_cast<double>(r.samples_ms.size());
        r.p50_ms = percentile(r.samples_ms, 0.50);
        r.p99_ms = percentile(r.samples_ms, 0.99);
    }
    return r;
}

void prepare_latency_bench(LinkEndpoint& real, LinkEndpoint& twin) {
    twin.subscribe(topics::bench_ping(kR2T));
    real.subscribe(topics::bench_pong(kR2T));
    real.subscribe(topics::bench_ping(kT2R));
    twin.subscribe(topics::bench_pong(kT2R));
}

std::vector<LatencyReport> run_latency_bench(LinkEndpoint& real, LinkEndpoint& twin, const BenchOptions& options) {
    if (options.sizes.empty() || options.samples_per_size == 0) throw std::invalid_argument("bench: nothing to measure");

    std::mt19937_64 rng(options.seed);
    std::uniform_int_distribution<int> byte(0, 255);
    std::vector<std::vector<std::uint8_t>> payloads;
    for (auto size : options.sizes) {
        std::vector<std::uint8_t> p(size);
        for (auto& b : p) b = static_cast<std::uint8_t>(byte(rng));
        payloads.push_back(std::move(p));
    }

    constexpr Direction kDirs[] = {Direction::RealToTwin, Direction::TwinToReal};
    auto run = [&](Direction d, std::size_t i) {
        return d == Direction::RealToTwin ? one_sample(real, twin, d, payloads[i], options.timeout)
                                          : one_sample(twin, real, d, payloads[i], options.timeout);
    };

    for (std::size_t w = 0; w < options.warmup; ++w)
        for (std::size_t i = 0; i < payloads.size(); ++i)
            for (auto d : kDirs) run(d, i);

    // raw[dir][size]
    std::vector<std::vector<std::vector<double>>> raw(2, std::vector<std::vector<double>>(payloads.size()));
    // Shuffled per round so no size always runs right after the largest one.
    std::vector<std::size_t> order(payloads.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    for (std::size_t s = 0; s < options.samples_per_size; ++s) {
        std::shuffle(order.begin(), order.end(), rng);
        for (auto i : order) {
            for (std::size_t di = 0; di < 2; ++di) raw[di][i].push_back(run(kDirs[di], i));
        }
    }

    std::vector<LatencyReport> out;
    for (std::size_t di = 0; di < 2; ++di)
        for (std::size_t i = 0; i < payloads.size(); ++i)
            out.push_back(summarize(options.sizes[i], kDirs[di], raw[di][i]));
    return out;
}

}  // namespace twinet::link
