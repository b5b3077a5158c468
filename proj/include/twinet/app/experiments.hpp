#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "twinet/app/config.hpp"
#include "twinet/app/csv.hpp"
#include "twinet/broker/tcp_broker.hpp"
#include "twinet/link/bench.hpp"
#include "twinet/link/endpoint.hpp"
#include "twinet/sadr/escalation.hpp"

namespace twinet::app {

/// Starts an in-process broker on an ephemeral loopback port unless an
/// external broker is given.
class BrokerScope {
public:
    explicit BrokerScope(const std::optional<net::Endpoint>& external);
    ~BrokerScope();
    BrokerScope(const BrokerScope&) = delete;
    BrokerScope& operator=(const BrokerScope&) = delete;

    const net::Endpoint& endpoint() const noexcept { return endpoint_; }

private:
    std::unique_ptr<broker::TcpBroker> broker_;
    net::Endpoint endpoint_;
};

link::LinkOptions link_options(const net::Endpoint& broker, std::string client_id);

struct BenchResult {
    Table table;  // size_bytes, direction, mean_ms, p50_ms, p99_ms, n
    std::vector<link::LatencyReport> reports;
};

BenchResult run_bench(const Settings& settings);

struct MirrorChange {
    std::size_t index = 0;
    double t_s = 0.0;
    double rate_pps = 0.0;
    std::uint64_t tick = 0;
    bool twin_matched = false;
    double delay_ms = 0.0;
};

struct MirrorResult {
    Table fig2;     // per tick: real and twin rates plus mirror delay
    Table ticks;    // per tick and UE on the twin
    Table changes;  // one row per rate change
    std::vector<MirrorChange> change_log;
    std::uint64_t ticks_run = 0;
    std::uint64_t applied = 0;
    std::uint64_t stale = 0;
    std::uint64_t rejected = 0;
    std::uint64_t duplicates = 0;
    std::uint64_t gaps = 0;
    double mean_change_delay_ms = 0.0;
    bool all_changes_matched = false;
};

/// Real and twin simulators on separate threads, coupled only through the
/// broker. The real side publishes every tick; the twin applies each update
/// and then steps.
MirrorResult run_mirror(const Settings& settings);

struct SadrRunResult {
    Table rewards;     // instance, arm, repetition, mean_reward
    Table cumulative;  // instance, arm, repetition, cumulative_reward
    Table decisions;   // gated arm only
    Table summary;     // per instance, both arms averaged over repetitions
    sadr::EscalationResult raw;
};

SadrRunResult run_sadr(const Settings& settings);

struct ArmComparison {
    double gated_mean = 0.0;
    double ungated_mean = 0.0;
    double relative_gain = 0.0;  // gated / ungated - 1
};

/// Means over repetitions and the instances in [first, last).
ArmComparison compare_arms(const sadr::EscalationResult& result, std::size_t first, std::size_t last);

struct PilotScenarioOutcome {
    std::string name;
    pilot::PilotConfig initial;
    pilot::PilotConfig relocated;
    bool completed = false;
    std::string error;
    pilot::RedeployTiming timing;
    double train_accuracy = 0.0;
    double test_accuracy = 0.0;
    std::optional<std::size_t> initial_detect_frames;
    std::optional<std::size_t> relocated_detect_frames;
    std::size_t initial_subcarrier = 0;
    std::size_t relocated_subcarrier = 0;
    bool relocated_subcarrier_ok = false;
    std::uint64_t false_alarms = 0;
    std::uint64_t mixed_observations = 0;
    std::uint64_t snapshots_checked = 0;
};

struct PilotRunResult {
    Table table2;     // channel_size, pilot_amount, training_accuracy, testing_accuracy
    Table table3;     // channel_size plus the five stage timings
    Table detection;  // per scenario and phase
    std::vector<PilotScenarioOutcome> scenarios;
};

PilotRunResult run_pilot(const Settings& settings);

}  // namespace twinet::app
