#include "twinet/netsim/simulator.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <utility>

namespace twinet::netsim {

void ScenarioConfig::validate() const {
    if (n_ues < 1) throw std::invalid_argument("n_ues must be >= 1");
    if (!(capacity_mbps > 0.0)) throw std::invalid_argument("capacity_mbps must be > 0");
    if (!(tick_ms > 0.0)) throw std::invalid_argument("tick_ms must be > 0");
    if (!(psr_noise_sigma >= 0.0)) throw std::invalid_argument("psr_noise_sigma must be >= 0");
}

std::vector<double> compute_psr(std::span<const double> r_act, const ScenarioConfig& config, std::mt19937_64& rng) {
    const double demand = std::accumulate(r_act.begin(), r_act.end(), 0.0);
    std::vector<double> psr(r_act.size(), 1.0);
    if (demand <= 0.0) return psr;

    const double base = std::min(1.0, config.capacity_mbps / demand);
    for (auto& p : psr) {
        double eps = 0.0;
        if (config.psr_noise_sigma > 0.0) {
            std::normal_distribution<double> noise(0.0, config.psr_noise_sigma);
            eps = noise(rng);
        }
        p = std::clamp(base + eps, 0.0, 1.0);
    }
    return psr;
}

std::uint64_t packets_per_tick(double rate_mbps, double tick_ms) noexcept {
    const double bits = rate_mbps * 1e6 * tick_ms / 1000.0;
    return static_cast<std::uint64_t>(std::llround(bits / (kPacketSizeBytes * 8.0)));
}

Simulator::Simulator(ScenarioConfig config)
    : config_(config), rng_(config.seed), r_act_(config.n_ues, 0.0), r_exp_(config.n_ues, 0.0) {
    config_.validate();
    state_.ues.assign(config_.n_ues, UEStat{});
}

void Simulator::check_rates(std::span<const double> rates) const {
    if (rates.size() != config_.n_ues) {
        throw std::invalid_argument(fmt::format("expected {} rates, got {}", config_.n_ues, rates.size()));
    }
    for (double r : rates) {
        if (!(r >= 0.0) || !std::isfinite(r)) throw std::invalid_argument(fmt::format("invalid rate {}", r));
    }
}

void Simulator::apply_allocation(std::span<const double> rates) {
    check_rates(rates);
    pending_act_.emplace(rates.begin(), rates.end());
}

void Simulator::set_demand(std::span<const double> rates) {
    check_rates(rates);
    pending_exp_.emplace(rates.begin(), rates.end());
}

void Simulator::launch(std::span<const double> rates) {
    check_rates(rates);
    pending_act_.emplace(rates.begin(), rates.end());
    pending_exp_.emplace(rates.begin(), rates.end());
}

std::vector<double> Simulator::next_allocation() const { return pending_act_ ? *pending_act_ : r_act_; }

NetworkState Simulator::step_tick() {
    if (pending_act_) r_act_ = *std::exchange(pending_act_, std::nullopt);
    if (pending_exp_) r_exp_ = *std::exchange(pending_exp_, std::nullopt);
    for (std::size_t i = 0; i < config_.n_ues; ++i) r_exp_[i] = std::max(r_exp_[i], r_act_[i]);

    const auto psr = compute_psr(r_act_, config_, rng_);

    NetworkState next;
    next.tick_index = state_.tick_index + 1;
    next.ues.resize(config_.n_ues);
    for (std::size_t i = 0; i < config_.n_ues; ++i) {
        UEStat& ue = next.ues[i];
        ue.r_exp_mbps = r_exp_[i];
        ue.r_act_mbps = r_act_[i];
        ue.psr = psr[i];
        ue.packets_sent = packets_per_tick(r_act_[i], config_.tick_ms);
        if (ue.packets_sent > 0) {
            std::binomial_distribution<std::uint64_t> delivered(ue.packets_sent, ue.psr);
            ue.packets_received = delivered(rng_);
        }
        next.aggregate_demand_mbps += r_act_[i];
    }
    state_ = next;
    return next;
}

}  // namespace twinet::netsim
