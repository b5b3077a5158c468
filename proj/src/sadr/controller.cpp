#include "twinet/sadr/controller.hpp"

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include <numeric>
#include <stdexcept>

namespace twinet::sadr {

ActionSet::ActionSet() {
    for (std::size_t a = 0; a < kActionCount; ++a) levels_[a] = 0.5 * static_cast<double>(a);
}

ActionSet::ActionSet(std::array<double, kActionCount> levels) : levels_(levels) {
    if (levels_.front() != 0.0 || levels_.back() != 4.5) {
        throw std::invalid_argument("action set must span 0 to 4.5 Mbps");
    }
    for (std::size_t a = 1; a < kActionCount; ++a) {
        if (!(levels_[a] > levels_[a - 1])) throw std::invalid_argument("action levels must strictly increase");
    }
}

double ActionSet::rate(std::size_t a) const {
    if (a >= kActionCount) throw std::out_of_range(fmt::format("action index {} out of range", a));
    return levels_[a];
}

double map_action_to_rate(std::size_t a) {
    static const ActionSet kDefault;
    return kDefault.rate(a);
}

TrafficRequest TrafficRequest::from_actions(std::uint64_t id, std::vector<std::size_t> actions, const ActionSet& set) {
    TrafficRequest req{id, std::move(actions), {}};
    req.risk_vector.reserve(req.actions.size());
    for (auto a : req.actions) req.risk_vector.push_back(set.rate(a));
    return req;
}

void SadrConfig::validate(double capacity_mbps) const {
    if (!(risk_threshold > 0.0)) throw std::invalid_argument("risk_threshold must be > 0");
    for (double r : safe_setup) {
        if (!(r >= 0.0)) throw std::invalid_argument("safe_setup rates must be >= 0");
    }
    if (compute_risk(safe_setup, capacity_mbps) > risk_threshold) {
        throw std::invalid_argument("safe_setup exceeds the risk threshold");
    }
    if (twin_horizon_ticks == 0) throw std::invalid_argument("twin_horizon_ticks must be >= 1");
}

double compute_risk(std::span<const double> risk_vector, double capacity_mbps) {
    return std::accumulate(risk_vector.begin(), risk_vector.end(), 0.0) / capacity_mbps;
}

double per_tick_reward(const netsim::NetworkState& state) {
    double reward = 0.0;
    for (const auto& ue : state.ues) {
        const double deficit = ue.r_exp_mbps > 0.0 ? (ue.r_exp_mbps - ue.r_act_mbps) / ue.r_exp_mbps : 0.0;
        reward += ue.psr - deficit;
    }
    return reward;
}

std::string_view to_string(Decision d) noexcept {
    switch (d) {
        case Decision::LaunchDirectly: return "launch_directly";
        case Decision::DeferToTwin: return "defer_to_twin";
        case Decision::FallbackSafe: return "fallback_safe";
    }
    return "?";
}

SadrController::SadrController(SadrConfig config, double capacity_mbps, LaunchFn launch, SubmitFn submit)
    : config_(std::move(config)), capacity_mbps_(capacity_mbps), launch_(std::move(launch)), submit_(std::move(submit)) {
    config_.validate(capacity_mbps_);
}

Decision SadrController::on_traffic_request(const TrafficRequest& req) {
    std::lock_guard lock(mutex_);
    const double risk = compute_risk(req.risk_vector, capacity_mbps_);
    if (!(risk > config_.risk_threshold)) {
        ++stats_.launched_directly;
        launch_(req.risk_vector);
        return Decision::LaunchDirectly;
    }
    bool sent = false;
    try {
        pending_[req.request_id] = req;
        sent = submit_ && submit_(req);
    } catch (const std::exception& e) {
        spdlog::warn("sadr: submitting request {} failed: {}", req.request_id, e.what());
    }
    if (!sent) {
        pending_.erase(req.request_id);
        ++stats_.fallbacks;
        launch_(config_.safe_setup);
        return Decision::FallbackSafe;
    }
    ++stats_.deferred;
    return Decision::DeferToTwin;
}

std::vector<double> SadrController::on_twin_evaluation_completed(const TwinEvaluation& eval) {
    std::lock_guard lock(mutex_);
    auto it = pending_.find(eval.request_id);
    if (it == pending_.end()) {
        ++stats_.unknown_results;
        return {};
    }
    const TrafficRequest req = std::move(it->second);
    pending_.erase(it);
    if (eval.twin_reward >= config_.app_requirements) {
        ++stats_.twin_accepted;
        launch_(req.risk_vector);
        return req.risk_vector;
    }
    ++stats_.twin_rejected;
    launch_(config_.safe_setup);
    return config_.safe_setup;
}

std::vector<double> SadrController::on_twin_unreachable(std::uint64_t request_id) {
    std::lock_guard lock(mutex_);
    if (pending_.erase(request_id) == 0) {
        ++stats_.unknown_results;
        return {};
    }
    ++stats_.fallbacks;
    launch_(config_.safe_setup);
    return config_.safe_setup;
}

ControllerStats SadrController::stats() const {
    std::lock_guard lock(mutex_);
    return stats_;
}

std::size_t SadrController::pending() const {
    std::lock_guard lock(mutex_);
    return pending_.size();
}

}  // namespace twinet::sadr
