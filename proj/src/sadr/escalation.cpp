#include "twinet/sadr/escalation.hpp"

#include <spdlog/spdlog.h>

#include <cmath>
#include <numeric>
#include <stdexcept>

namespace twinet::sadr {

std::string_view to_string(Arm a) noexcept { return a == Arm::Gated ? "gated" : "ungated"; }

std::vector<std::vector<std::size_t>> default_escalation() {
    return {{1, 0, 0}, {1, 1, 1}, {2, 2, 1}, {2, 2, 2}, {3, 3, 3}, {4, 4, 3},
            {4, 4, 4}, {5, 5, 5}, {6, 6, 6}, {7, 7, 7}, {8, 8, 8}, {9, 9, 9}};
}

std::size_t dwell_ticks(double dwell_s, double tick_ms) {
    const auto n = std::llround(dwell_s * 1000.0 / tick_ms);
    if (n < 1) throw std::invalid_argument("dwell shorter than one tick");
    return static_cast<std::size_t>(n);
}

double baseline_reward(const netsim::ScenarioConfig& scenario, std::span<const double> rates, std::size_t ticks) {
    netsim::Simulator sim(scenario);
    sim.launch(rates);
    double total = 0.0;
    for (std::size_t t = 0; t < ticks; ++t) total += per_tick_reward(sim.step_tick());
    return total / static_cast<double>(ticks);
}

namespace {

void add(ControllerStats& into, const ControllerStats& s) {
    into.launched_directly += s.launched_directly;
    into.deferred += s.deferred;
    into.twin_accepted += s.twin_accepted;
    into.twin_rejected += s.twin_rejected;
    into.fallbacks += s.fallbacks;
    into.unknown_results += s.unknown_results;
}

}  // namespace

EscalationResult run_escalating_scenario(const EscalationOptions& options, EvalTransport& transport) {
    options.scenario.validate();
    if (options.repetitions == 0) throw std::invalid_argument("repetitions must be >= 1");
    for (const auto& inst : options.instances) {
        if (inst.size() != options.scenario.n_ues) throw std::invalid_argument("instance size must equal n_ues");
    }

    const std::size_t ticks = dwell_ticks(options.dwell_s, options.scenario.tick_ms);
    EscalationResult result;
    SadrConfig sadr = options.sadr;
    if (options.derive_requirements) {
        const auto moderate = TrafficRequest::from_actions(0, options.moderate_actions);
        sadr.app_requirements = baseline_reward(options.scenario, moderate.risk_vector, ticks);
    }
    result.app_requirements = sadr.app_requirements;

    std::vector<Arm> arms;
    if (options.run_gated) arms.push_back(Arm::Gated);
    if (options.run_ungated) arms.push_back(Arm::Ungated);

    for (std::size_t rep = 0; rep < options.repetitions; ++rep) {
        for (Arm arm : arms) {
            auto cfg = options.scenario;
            cfg.seed = mix_seed(options.scenario.seed, rep);
            netsim::Simulator real(cfg);

            std::vector<double> applied;
            auto launch = [&](const std::vector<double>& rates) {
                real.launch(rates);
                applied = rates;
            };
            auto submit = [&](const TrafficRequest& req) { return transport.submit(req, sadr.twin_horizon_ticks); };
            SadrController controller(sadr, cfg.capacity_mbps, launch, submit);

            for (std::size_t i = 0; i < options.instances.size(); ++i) {
                const auto req = TrafficRequest::from_actions(rep * options.instances.size() + i + 1,
                                                              options.instances[i]);
                InstanceResult row{i, arm, rep, std::accumulate(req.risk_vector.begin(), req.risk_vector.end(), 0.0)};
                if (arm == Arm::Ungated) {
                    launch(req.risk_vector);
                    row.decision = Decision::LaunchDirectly;
                } else {
                    row.decision = controller.on_traffic_request(req);
                    if (row.decision == Decision::DeferToTwin) {
                        if (auto eval = transport.await(req.request_id, options.eval_timeout)) {
                            controller.on_twin_evaluation_completed(*eval);
                        } else {
                            spdlog::warn("sadr: no twin result for request {}, applying safe setup", req.request_id);
                            controller.on_twin_unreachable(req.request_id);
                            row.decision = Decision::FallbackSafe;
                        }
                    }
                }
                row.applied = applied;
                for (std::size_t t = 0; t < ticks; ++t) row.cumulative_reward += per_tick_reward(real.step_tick());
                row.mean_reward = row.cumulative_reward / static_cast<double>(ticks);
                result.rows.push_back(std::move(row));
            }
            if (arm == Arm::Gated) {
                add(result.gated_stats, controller.stats());
                result.flagged = result.flagged || controller.stats().fallbacks > 0;
            }
        }
    }
    return result;
}

}  // namespace twinet::sadr
