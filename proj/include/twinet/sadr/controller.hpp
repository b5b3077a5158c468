#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <mutex>
#include <span>
#include <vector>

#include "twinet/netsim/simulator.hpp"

namespace twinet::sadr {

inline constexpr std::size_t kActionCount = 10;

/// The ten exclusive per-UE traffic levels, 0 to 4.5 Mbps.
class ActionSet {
public:
    /// Linear 0.5 Mbps spacing.
    ActionSet();
    /// Throws std::invalid_argument unless levels[0] == 0, levels[9] == 4.5 and strictly increasing.
    explicit ActionSet(std::array<double, kActionCount> levels);

    /// Throws std::out_of_range for a >= 10.
    double rate(std::size_t a) const;
    const std::array<double, kActionCount>& levels() const noexcept { return levels_; }

private:
    std::array<double, kActionCount> levels_;
};

/// f(a) under the default linear action set.
double map_action_to_rate(std::size_t a);

struct TrafficRequest {
    std::uint64_t request_id = 0;
    std::vector<std::size_t> actions;
    std::vector<double> risk_vector;  // f(actions[i]), Mbps

    static TrafficRequest from_actions(std::uint64_t id, std::vector<std::size_t> actions,
                                       const ActionSet& set = ActionSet{});
};

struct SadrConfig {
    double risk_threshold = 0.8;
    double app_requirements = 0.0;
    std::vector<double> safe_setup{1.0, 1.0, 1.0};
    std::size_t twin_horizon_ticks = 50;

    /// Throws std::invalid_argument.
    void validate(double capacity_mbps) const;
};

struct TwinEvaluation {
    std::uint64_t request_id = 0;
    double twin_reward = 0.0;
    std::vector<double> per_tick_rewards;
};

/// Aggregate requested rate over capacity.
double compute_risk(std::span<const double> risk_vector, double capacity_mbps);

/// Sum over UEs of psr - (r_exp - r_act)/r_exp; the deficit is 0 when r_exp == 0.
double per_tick_reward(const netsim::NetworkState& state);

enum class Decision { LaunchDirectly, DeferToTwin, FallbackSafe };

std::string_view to_string(Decision d) noexcept;

struct ControllerStats {
    std::uint64_t launched_directly = 0;
    std::uint64_t deferred = 0;
    std::uint64_t twin_accepted = 0;
    std::uint64_t twin_rejected = 0;
    std::uint64_t fallbacks = 0;  // twin unreachable, safe_setup applied
    std::uint64_t unknown_results = 0;
};

/// Event-driven admission controller. Both handlers are serialized by an
/// internal mutex, so they may be called from different threads.
class SadrController {
public:
    /// Applies a configuration to the real network.
    using LaunchFn = std::function<void(const std::vector<double>&)>;
    /// Sends the request to the twin; returns false if the twin cannot be reached.
    using SubmitFn = std::function<bool(const TrafficRequest&)>;

    SadrController(SadrConfig config, double capacity_mbps, LaunchFn launch, SubmitFn submit);

    Decision on_traffic_request(const TrafficRequest& req);

    /// Returns the applied rates, or empty if request_id is not pending.
    std::vector<double> on_twin_evaluation_completed(const TwinEvaluation& eval);

    /// The pending request will never be answered; applies safe_setup.
    std::vector<double> on_twin_unreachable(std::uint64_t request_id);

    ControllerStats stats() const;
    std::size_t pending() const;
    const SadrConfig& config() const noexcept { return config_; }

private:
    SadrConfig config_;
    double capacity_mbps_;
    LaunchFn launch_;
    SubmitFn submit_;

    mutable std::mutex mutex_;
    std::map<std::uint64_t, TrafficRequest> pending_;
    ControllerStats stats_;
};

}  // namespace twinet::sadr
