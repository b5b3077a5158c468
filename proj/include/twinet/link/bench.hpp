#pragma once

#include <chrono>
#include <cstdint>
#include <string>
#include <vector>

#include "twinet/link/endpoint.hpp"

namespace twinet::link {

enum class Direction { RealToTwin, TwinToReal };

std::string_view to_string(Direction d) noexcept;  // "real_to_twin" / "twin_to_real"

struct LatencyReport {
    std::size_t payload_size = 0;
    Direction direction = Direction::RealToTwin;
    std::vector<double> samples_ms;  // kept samples, in collection order
    std::size_t discarded_negative = 0;
    double mean_ms = 0.0;
    double p50_ms = 0.0;
    double p99_ms = 0.0;
};

/// Nearest-rank percentile of unsorted samples; q in [0, 1].
double percentile(std::vector<double> samples, double q);

/// Builds a report from raw one-way latencies. Negative samples (clock
/// adjustments) are dropped and counted.
LatencyReport summarize(std::size_t payload_size, Direction direction, const std::vector<double>& raw_ms);

struct BenchOptions {
    std::vector<std::size_t> sizes{1, 100, 1000, 10000, 100000, 1000000};
    std::size_t samples_per_size = 100;
    std::size_t warmup = 5;  // per size and direction, not recorded
    std::uint64_t seed = 1;
    std::chrono::milliseconds timeout{5000};
};

/// Ping/pong latency measurement between two connected endpoints.
///
/// Each sample is one-way: receiver-side arrival stamp minus the sender's
/// sent_at. The receiver echoes a 1-byte pong before the next ping so the
/// broker is idle when each sample starts. Sizes and directions are
/// interleaved to spread slow drift across all cells. Call the setup
/// function first; it subscribes both sides.
void prepare_latency_bench(LinkEndpoint& real, LinkEndpoint& twin);
std::vector<LatencyReport> run_latency_bench(LinkEndpoint& real, LinkEndpoint& twin, const BenchOptions& options);

}  // namespace twinet::link
