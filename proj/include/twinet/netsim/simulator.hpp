#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

namespace twinet::netsim {

/// Fixed packet size: 1 Mbps == 100 packets/s.
inline constexpr double kPacketSizeBytes = 1250.0;

inline constexpr double pps_to_mbps(double pps) noexcept { return pps * kPacketSizeBytes * 8.0 / 1e6; }
inline constexpr double mbps_to_pps(double mbps) noexcept { return mbps * 1e6 / (kPacketSizeBytes * 8.0); }

struct ScenarioConfig {
    std::size_t n_ues = 3;
    double capacity_mbps = 9.0;
    double tick_ms = 100.0;
    double psr_noise_sigma = 0.02;
    std::uint64_t seed = 1;

    /// Throws std::invalid_argument.
    void validate() const;
};

struct UEStat {
    double r_exp_mbps = 0.0;
    double r_act_mbps = 0.0;
    std::uint64_t packets_sent = 0;
    std::uint64_t packets_received = 0;
    double psr = 1.0;

    bool operator==(const UEStat&) const = default;
};

struct NetworkState {
    std::uint64_t tick_index = 0;
    std::vector<UEStat> ues;
    double aggregate_demand_mbps = 0.0;  // sum of r_act

    bool operator==(const NetworkState&) const = default;
};

/// PSR_i = clamp(min(1, C/D) + eps_i, 0, 1), eps_i ~ N(0, sigma); 1 when D == 0.
std::vector<double> compute_psr(std::span<const double> r_act, const ScenarioConfig& config, std::mt19937_64& rng);

/// round(rate * tick / packet size)
std::uint64_t packets_per_tick(double rate_mbps, double tick_ms) noexcept;

/// Single-threaded discrete-tick downlink cell.
///
/// Allocation changes are staged and committed at the start of the next
/// step_tick(), so the state emitted for tick k+1 is the first to reflect a
/// change made after tick k.
class Simulator {
public:
    explicit Simulator(ScenarioConfig config);

    /// Stages granted rates (r_act). Throws std::invalid_argument on wrong
    /// length or a negative rate.
    void apply_allocation(std::span<const double> rates);
    /// Stages expected rates (r_exp). r_exp is raised to r_act at commit.
    void set_demand(std::span<const double> rates);
    /// Stages a configuration as both expected and granted rates.
    void launch(std::span<const double> rates);

    NetworkState step_tick();

    const NetworkState& state() const noexcept { return state_; }
    const ScenarioConfig& config() const noexcept { return config_; }
    std::uint64_t tick_index() const noexcept { return state_.tick_index; }
    /// Rates that the next tick will use (staged or current).
    std::vector<double> next_allocation() const;

private:
    void check_rates(std::span<const double> rates) const;

    ScenarioConfig config_;
    std::mt19937_64 rng_;
    NetworkState state_;
    std::vector<double> r_act_;
    std::vector<double> r_exp_;
    std::optional<std::vector<double>> pending_act_;
    std::optional<std::vector<double>> pending_exp_;
};

}  // namespace twinet::netsim
