#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "twinet/broker/tcp_broker.hpp"
#include "twinet/sadr/controller.hpp"
#include "twinet/sadr/escalation.hpp"
#include "twinet/sadr/twin_eval.hpp"

using namespace twinet;
using namespace twinet::sadr;

namespace {

netsim::ScenarioConfig quiet() {
    netsim::ScenarioConfig c;
    c.psr_noise_sigma = 0.0;
    return c;
}

/// ONP term recomputed UE by UE from the definition.
double reference_reward(const netsim::NetworkState& s) {
    long double total = 0.0L;
    for (const auto& ue : s.ues) {
        long double term = ue.psr;
        if (ue.r_exp_mbps != 0.0) term -= (static_cast<long double>(ue.r_exp_mbps) - ue.r_act_mbps) / ue.r_exp_mbps;
        total += term;
    }
    return static_cast<double>(total);
}

struct Recorder {
    std::vector<std::vector<double>> launched;
    std::vector<TrafficRequest> submitted;
    bool reachable = true;

    SadrController make(SadrConfig cfg, double capacity) {
        return SadrController(
            std::move(cfg), capacity, [this](const std::vector<double>& r) { launched.push_back(r); },
            [this](const TrafficRequest& r) {
                submitted.push_back(r);
                return reachable;
            });
    }
};

}  // namespace

TEST(ActionSet, Mapping) {
    EXPECT_EQ(map_action_to_rate(0), 0.0);
    EXPECT_EQ(map_action_to_rate(9), 4.5);
    EXPECT_EQ(map_action_to_rate(5), 2.5);
    EXPECT_THROW(map_action_to_rate(10), std::out_of_range);
    EXPECT_THROW(ActionSet({0, 1, 2, 3, 4, 5, 6, 7, 8, 9}), std::invalid_argument);
    EXPECT_THROW(ActionSet({0, 0.5, 0.5, 1.5, 2, 2.5, 3, 3.5, 4, 4.5}), std::invalid_argument);
    const auto req = TrafficRequest::from_actions(1, {9, 0, 3});
    EXPECT_EQ(req.risk_vector, (std::vector<double>{4.5, 0.0, 1.5}));
}

TEST(Risk, Examples) {
    EXPECT_EQ(compute_risk(std::vector<double>{0, 0, 0}, 9.0), 0.0);
    EXPECT_DOUBLE_EQ(compute_risk(std::vector<double>{4.5, 4.5, 4.5}, 9.0), 1.5);
    EXPECT_DOUBLE_EQ(compute_risk(std::vector<double>{1.5, 1.5, 1.5}, 9.0), 0.5);
}

TEST(Reward, Examples) {
    netsim::NetworkState s;
    s.ues.assign(3, netsim::UEStat{2.0, 2.0, 0, 0, 1.0});
    EXPECT_DOUBLE_EQ(per_tick_reward(s), 3.0);

    netsim::NetworkState one;
    one.ues = {netsim::UEStat{3.0, 1.5, 0, 0, 0.8}};
    EXPECT_NEAR(per_tick_reward(one), 0.3, 1e-15);

    netsim::NetworkState idle;
    idle.ues.assign(3, netsim::UEStat{0.0, 0.0, 0, 0, 1.0});
    EXPECT_EQ(per_tick_reward(idle), 3.0);
}

TEST(Reward, MatchesReferenceOnRandomStates) {
    std::mt19937_64 rng(61);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_int_distribution<int> n(1, 6);
    for (int i = 0; i < 1000; ++i) {
        netsim::NetworkState s;
        const int ues = n(rng);
        double max_reward = 0.0;
        for (int u = 0; u < ues; ++u) {
            netsim::UEStat ue;
            ue.r_exp_mbps = unit(rng) < 0.15 ? 0.0 : 4.5 * unit(rng);
            ue.r_act_mbps = ue.r_exp_mbps * (unit(rng) < 0.3 ? 1.0 : unit(rng));
            ue.psr = unit(rng);
            s.ues.push_back(ue);
            max_reward += 1.0;
        }
        const double r = per_tick_reward(s);
        ASSERT_NEAR(r, reference_reward(s), 1e-12);
        ASSERT_LE(r, max_reward);
    }
}

TEST(Reward, DeficitStrictlyIncreasesAsGrantShrinks) {
    double prev = -1.0;
    for (double act = 3.0; act >= 0.0; act -= 0.25) {
        netsim::NetworkState s;
        s.ues = {netsim::UEStat{3.0, act, 0, 0, 1.0}};
        const double deficit = 1.0 - per_tick_reward(s);
        EXPECT_GT(deficit, prev);
        prev = deficit;
    }
}

TEST(Controller, TruthTable) {
    // Dyadic values keep risk exactly representable on either side of the threshold.
    constexpr double capacity = 8.0, threshold = 0.75, app = 2.0, eps = 1.0 / (1 << 20);
    const double risks[] = {0.0, 0.5, threshold - eps, threshold, threshold + eps, 1.0, 1.5};
    const double rewards[] = {0.0, app - eps, app, app + eps, 3.0};
    const std::vector<double> safe{1.0};

    for (double risk : risks) {
        for (double tw : rewards) {
            Recorder rec;
            auto ctl = rec.make(SadrConfig{threshold, app, safe, 50}, capacity);
            const std::vector<double> requested{risk * capacity};
            const auto d = ctl.on_traffic_request({7, {0}, requested});

            // Hand-written table of the two handlers.
            const bool direct = risk <= threshold;
            const bool accepted = tw >= app;
            if (direct) {
                ASSERT_EQ(d, Decision::LaunchDirectly) << risk;
                ASSERT_EQ(rec.launched, (std::vector<std::vector<double>>{requested}));
                ASSERT_TRUE(rec.submitted.empty());
                ASSERT_TRUE(ctl.on_twin_evaluation_completed({7, tw, {}}).empty());
                continue;
            }
            ASSERT_EQ(d, Decision::DeferToTwin) << risk;
            ASSERT_TRUE(rec.launched.empty());
            ASSERT_EQ(ctl.pending(), 1u);
            const auto applied = ctl.on_twin_evaluation_completed({7, tw, {}});
            ASSERT_EQ(applied, accepted ? requested : safe) << risk << " " << tw;
            ASSERT_EQ(rec.launched.back(), applied);
            ASSERT_EQ(ctl.pending(), 0u);
        }
    }
}

TEST(Controller, WorkedExamples) {
    Recorder rec;
    auto ctl = rec.make(SadrConfig{0.8, 2.1, {1, 1, 1}, 50}, 9.0);
    EXPECT_EQ(ctl.on_traffic_request({1, {3, 3, 3}, {1.5, 1.5, 1.5}}), Decision::LaunchDirectly);
    EXPECT_EQ(ctl.on_traffic_request({2, {9, 9, 9}, {4.5, 4.5, 4.5}}), Decision::DeferToTwin);
    EXPECT_EQ(ctl.on_twin_evaluation_completed({2, 2.4, {}}), (std::vector<double>{4.5, 4.5, 4.5}));
    EXPECT_EQ(ctl.on_traffic_request({3, {9, 9, 9}, {4.5, 4.5, 4.5}}), Decision::DeferToTwin);
    EXPECT_EQ(ctl.on_twin_evaluation_completed({3, 1.8, {}}), (std::vector<double>{1, 1, 1}));
    EXPECT_EQ(ctl.on_traffic_request({4, {9, 9, 9}, {4.5, 4.5, 4.5}}), Decision::DeferToTwin);
    EXPECT_EQ(ctl.on_twin_evaluation_completed({4, 2.1, {}}), (std::vector<double>{4.5, 4.5, 4.5}));
}

TEST(Controller, UnknownResultIgnoredAndCounted) {
    Recorder rec;
    auto ctl = rec.make(SadrConfig{0.8, 2.0, {1, 1, 1}, 50}, 9.0);
    EXPECT_TRUE(ctl.on_twin_evaluation_completed({99, 3.0, {}}).empty());
    EXPECT_TRUE(ctl.on_twin_unreachable(99).empty());
    EXPECT_EQ(ctl.stats().unknown_results, 2u);
    EXPECT_TRUE(rec.launched.empty());
}

TEST(Controller, UnreachableTwinFallsBackToSafeSetup) {
    Recorder rec;
    rec.reachable = false;
    auto ctl = rec.make(SadrConfig{0.8, 2.0, {1, 1, 1}, 50}, 9.0);
    EXPECT_EQ(ctl.on_traffic_request({1, {9, 9, 9}, {4.5, 4.5, 4.5}}), Decision::FallbackSafe);
    EXPECT_EQ(rec.launched.back(), (std::vector<double>{1, 1, 1}));
    EXPECT_EQ(ctl.pending(), 0u);

    rec.reachable = true;
    EXPECT_EQ(ctl.on_traffic_request({2, {9, 9, 9}, {4.5, 4.5, 4.5}}), Decision::DeferToTwin);
    EXPECT_EQ(ctl.on_twin_unreachable(2), (std::vector<double>{1, 1, 1}));
    EXPECT_EQ(ctl.stats().fallbacks, 2u);
}

TEST(Controller, ConfigValidation) {
    Recorder rec;
    EXPECT_THROW(rec.make(SadrConfig{0.8, 2.0, {4.5, 4.5, 4.5}, 50}, 9.0), std::invalid_argument);
    EXPECT_THROW(rec.make(SadrConfig{0.8, 2.0, {1, 1, 1}, 0}, 9.0), std::invalid_argument);
    EXPECT_THROW(rec.make(SadrConfig{0.0, 2.0, {1, 1, 1}, 50}, 9.0), std::invalid_argument);
}

TEST(TwinEvaluate, Examples) {
    netsim::Simulator safe(quiet());
    EXPECT_EQ(twin_evaluate(safe, 1, std::vector<double>{1, 1, 1}, 50).twin_reward, 3.0);

    netsim::Simulator heavy(quiet());
    const auto e = twin_evaluate(heavy, 2, std::vector<double>{4.5, 4.5, 4.5}, 50);
    EXPECT_NEAR(e.twin_reward, 2.0, 1e-12);
    ASSERT_EQ(e.per_tick_rewards.size(), 50u);
    for (double r : e.per_tick_rewards) EXPECT_NEAR(r, 2.0, 1e-12);
}

TEST(TwinEvaluate, RewardIsMeanOfTickLog) {
    std::mt19937_64 rng(71);
    std::uniform_int_distribution<int> action(0, 9);
    for (int i = 0; i < 50; ++i) {
        netsim::ScenarioConfig cfg;
        cfg.seed = rng();
        netsim::Simulator twin(cfg);
        const std::vector<double> rates{map_action_to_rate(action(rng)), map_action_to_rate(action(rng)),
                                        map_action_to_rate(action(rng))};
        std::vector<netsim::NetworkState> log;
        const auto e = twin_evaluate(twin, i, rates, 40, &log);
        ASSERT_EQ(log.size(), 40u);
        double sum = 0.0;
        for (const auto& s : log) sum += reference_reward(s);
        ASSERT_NEAR(e.twin_reward, sum / 40.0, 1e-12);
    }
}

TEST(TwinEvaluate, ServiceIndependentOfArrivalOrder) {
    TwinEvalService svc{netsim::ScenarioConfig{}};
    const EvalRequest a{1, {4.5, 4.5, 4.5}, 50}, b{2, {3, 3, 3}, 50};
    const auto a1 = svc.evaluate(a);
    svc.evaluate(b);
    const auto a2 = svc.evaluate(a);
    EXPECT_EQ(a1.per_tick_rewards, a2.per_tick_rewards);
}

TEST(EvalPayloads, RoundTrip) {
    const EvalRequest r{5, {1.5, 0, 4.5}, 30};
    const auto d = decode_eval_request(encode_eval_request(r));
    EXPECT_EQ(d.request_id, 5u);
    EXPECT_EQ(d.rates_mbps, r.rates_mbps);
    EXPECT_EQ(d.horizon_ticks, 30u);
    const TwinEvaluation e{5, 2.25, {2.0, 2.5}};
    const auto de = decode_eval_result(encode_eval_result(e));
    EXPECT_EQ(de.request_id, 5u);
    EXPECT_EQ(de.twin_reward, 2.25);
    EXPECT_EQ(de.per_tick_rewards, e.per_tick_rewards);
}

TEST(TwinEvaluate, OverTheLinkMatchesLocal) {
    broker::TcpBroker broker(net::Endpoint{"127.0.0.1", 0});
    broker.start();
    link::LinkOptions ro{.broker = broker.endpoint(), .client_id = "ctl", .default_qos = mqtt::QoS::AtLeastOnce};
    auto to = ro;
    to.client_id = "twin";
    link::LinkEndpoint real(ro), twin(to);
    real.connect();
    twin.connect();
    netsim::ScenarioConfig cfg;
    cfg.seed = 5;
    const TwinEvalService svc(cfg);
    std::atomic<bool> stop{false};
    std::thread server([&] { svc.serve(twin, stop); });

    LinkEvalTransport remote(real);
    LocalEvalTransport local(cfg);
    for (std::uint64_t id = 1; id <= 5; ++id) {
        const auto req = TrafficRequest::from_actions(id, {9, 8, static_cast<std::size_t>(id)});
        ASSERT_TRUE(remote.submit(req, 50));
        ASSERT_TRUE(local.submit(req, 50));
    }
    // Await out of order; early results are kept.
    for (std::uint64_t id : {3, 1, 5, 2, 4}) {
        const auto r = remote.await(id, std::chrono::milliseconds{3000});
        const auto l = local.await(id, std::chrono::milliseconds{0});
        ASSERT_TRUE(r && l);
        EXPECT_EQ(r->twin_reward, l->twin_reward);
    }
    EXPECT_FALSE(remote.await(42, std::chrono::milliseconds{50}));
    stop = true;
    server.join();
    real.close();
    twin.close();
    broker.stop();
}

namespace {

EscalationOptions small_options(double sigma) {
    EscalationOptions o;
    o.scenario.psr_noise_sigma = sigma;
    o.dwell_s = 5.0;
    o.repetitions = 3;
    return o;
}

}  // namespace

TEST(Escalation, LowestDemandBothArmsAtMaximum) {
    auto o = small_options(0.0);
    LocalEvalTransport t(o.scenario);
    const auto res = run_escalating_scenario(o, t);
    for (const auto& row : res.rows) {
        if (row.instance == 0) {
            EXPECT_EQ(row.mean_reward, 3.0);
            EXPECT_EQ(row.decision, Decision::LaunchDirectly);
        }
    }
}

TEST(Escalation, GatedNeverWorseAtTopDemandWithoutNoise) {
    auto o = small_options(0.0);
    LocalEvalTransport t(o.scenario);
    const auto res = run_escalating_scenario(o, t);
    const auto last = o.instances.size() - 1;
    for (std::size_t rep = 0; rep < o.repetitions; ++rep) {
        double g = 0, u = 0;
        for (const auto& row : res.rows) {
            if (row.instance != last || row.repetition != rep) continue;
            (row.arm == Arm::Gated ? g : u) = row.mean_reward;
        }
        EXPECT_GE(g, u);
    }
}

TEST(Escalation, SafetyBoundWithoutNoise) {
    auto o = small_options(0.0);
    LocalEvalTransport t(o.scenario);
    const auto res = run_escalating_scenario(o, t);
    const auto ticks = dwell_ticks(o.dwell_s, o.scenario.tick_ms);
    const double safe_reward = baseline_reward(o.scenario, o.sadr.safe_setup, ticks);
    for (const auto& row : res.rows) {
        if (row.arm != Arm::Gated) continue;
        std::vector<double> requested;
        for (auto a : o.instances[row.instance]) requested.push_back(map_action_to_rate(a));
        const double bound = std::min(baseline_reward(o.scenario, requested, ticks), safe_reward);
        EXPECT_GE(row.mean_reward, bound - 1e-12) << "instance " << row.instance;
    }
}

TEST(Escalation, DeterministicAndArmsShareSeeds) {
    auto o = small_options(0.02);
    LocalEvalTransport t1(o.scenario), t2(o.scenario);
    const auto a = run_escalating_scenario(o, t1);
    const auto b = run_escalating_scenario(o, t2);
    ASSERT_EQ(a.rows.size(), b.rows.size());
    for (std::size_t i = 0; i < a.rows.size(); ++i) EXPECT_EQ(a.rows[i].mean_reward, b.rows[i].mean_reward);
    // Instances that never reach the twin run identical configurations in both arms.
    for (const auto& g : a.rows) {
        if (g.arm != Arm::Gated || g.decision != Decision::LaunchDirectly) continue;
        for (const auto& u : a.rows) {
            if (u.arm == Arm::Ungated && u.instance == g.instance && u.repetition == g.repetition) {
                EXPECT_EQ(u.mean_reward, g.mean_reward);
            }
        }
    }
}

TEST(Escalation, DerivedRequirementIsModerateBaseline) {
    auto o = small_options(0.02);
    LocalEvalTransport t(o.scenario);
    const auto res = run_escalating_scenario(o, t);
    std::vector<double> moderate;
    for (auto a : o.moderate_actions) moderate.push_back(map_action_to_rate(a));
    EXPECT_EQ(res.app_requirements,
              baseline_reward(o.scenario, moderate, dwell_ticks(o.dwell_s, o.scenario.tick_ms)));
}

TEST(Escalation, UnreachableTwinFlagsRun) {
    struct Dead final : EvalTransport {
        bool submit(const TrafficRequest&, std::size_t) override { return true; }
        std::optional<TwinEvaluation> await(std::uint64_t, std::chrono::milliseconds) override { return {}; }
    } dead;
    auto o = small_options(0.0);
    o.run_ungated = false;
    o.repetitions = 1;
    o.eval_timeout = std::chrono::milliseconds{1};
    const auto res = run_escalating_scenario(o, dead);
    EXPECT_TRUE(res.flagged);
    EXPECT_GT(res.gated_stats.fallbacks, 0u);
    for (const auto& row : res.rows) {
        if (row.decision == Decision::FallbackSafe) EXPECT_EQ(row.applied, o.sadr.safe_setup);
    }
}
