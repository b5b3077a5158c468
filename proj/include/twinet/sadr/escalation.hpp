#pragma once

#include <chrono>
#include <vector>

#include "twinet/netsim/simulator.hpp"
#include "twinet/sadr/controller.hpp"
#include "twinet/sadr/twin_eval.hpp"

namespace twinet::sadr {

enum class Arm { Gated, Ungated };

std::string_view to_string(Arm a) noexcept;

/// Twelve action triples with non-decreasing aggregate demand, from 0.5 to 13.5 Mbps.
std::vector<std::vector<std::size_t>> default_escalation();

struct EscalationOptions {
    netsim::ScenarioConfig scenario;
    SadrConfig sadr{0.8, 0.0, {2.0, 2.0, 2.0}, 50};
    /// Replace sadr.app_requirements with the moderate baseline's mean reward.
    bool derive_requirements = true;
    std::vector<std::size_t> moderate_actions{4, 4, 4};
    std::vector<std::vector<std::size_t>> instances = default_escalation();
    double dwell_s = 60.0;
    std::size_t repetitions = 10;
    bool run_gated = true;
    bool run_ungated = true;
    std::chrono::milliseconds eval_timeout{2000};
};

struct InstanceResult {
    std::size_t instance = 0;
    Arm arm = Arm::Gated;
    std::size_t repetition = 0;
    double demand_mbps = 0.0;  // requested aggregate
    Decision decision = Decision::LaunchDirectly;
    std::vector<double> applied;
    double mean_reward = 0.0;
    double cumulative_reward = 0.0;
};

struct EscalationResult {
    double app_requirements = 0.0;
    std::vector<InstanceResult> rows;  // rep-major, then arm, then instance
    ControllerStats gated_stats;       // summed over repetitions
    bool flagged = false;              // some request fell back because the twin was unreachable
};

std::size_t dwell_ticks(double dwell_s, double tick_ms);

/// Mean per-tick reward of `rates` held for `ticks` on a fresh simulator.
double baseline_reward(const netsim::ScenarioConfig& scenario, std::span<const double> rates, std::size_t ticks);

/// Plays the escalating request sequence once per arm and repetition.
/// Repetition r seeds the real simulator identically in both arms, so the
/// arms differ only in which configuration gets launched.
EscalationResult run_escalating_scenario(const EscalationOptions& options, EvalTransport& transport);

}  // namespace twinet::sadr
