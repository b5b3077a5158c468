#include <gtest/gtest.h>

#include <random>

#include "twinet/broker/tcp_broker.hpp"
#include "twinet/link/clock.hpp"
#include "twinet/netsim/mirror.hpp"
#include "twinet/netsim/schedule.hpp"
#include "twinet/netsim/simulator.hpp"

using namespace twinet;
using namespace twinet::netsim;

namespace {

ScenarioConfig quiet(std::size_t n = 3, double capacity = 9.0) {
    ScenarioConfig c;
    c.n_ues = n;
    c.capacity_mbps = capacity;
    c.psr_noise_sigma = 0.0;
    return c;
}

}  // namespace

TEST(Units, PacketSize) {
    EXPECT_DOUBLE_EQ(mbps_to_pps(1.0), 100.0);
    EXPECT_DOUBLE_EQ(pps_to_mbps(250.0), 2.5);
    EXPECT_EQ(packets_per_tick(1.0, 100.0), 10u);
    EXPECT_EQ(packets_per_tick(4.5, 100.0), 45u);
    EXPECT_EQ(packets_per_tick(0.0, 100.0), 0u);
}

TEST(Psr, Examples) {
    std::mt19937_64 rng(1);
    const auto cfg = quiet();
    const std::vector<double> light{1.5, 1.5, 1.5}, heavy{4.5, 4.5, 4.5}, none{0, 0, 0};
    for (double p : compute_psr(light, cfg, rng)) EXPECT_EQ(p, 1.0);
    for (double p : compute_psr(heavy, cfg, rng)) EXPECT_DOUBLE_EQ(p, 9.0 / 13.5);
    for (double p : compute_psr(none, cfg, rng)) EXPECT_EQ(p, 1.0);
}

TEST(Psr, NonIncreasingInDemandWithoutNoise) {
    std::mt19937_64 rng(1);
    const auto cfg = quiet(1);
    double prev = 1.0;
    for (double d = 0.0; d <= 40.0; d += 0.25) {
        const std::vector<double> r{d};
        const double p = compute_psr(r, cfg, rng)[0];
        if (d <= cfg.capacity_mbps) EXPECT_EQ(p, 1.0);
        EXPECT_LE(p, prev);
        prev = p;
    }
}

TEST(Psr, AlwaysInUnitInterval) {
    std::mt19937_64 rng(2);
    ScenarioConfig cfg;
    cfg.psr_noise_sigma = 0.5;
    std::uniform_real_distribution<double> rate(0.0, 6.0);
    for (int i = 0; i < 2000; ++i) {
        const std::vector<double> r{rate(rng), rate(rng), rate(rng)};
        for (double p : compute_psr(r, cfg, rng)) {
            ASSERT_GE(p, 0.0);
            ASSERT_LE(p, 1.0);
        }
    }
}

TEST(Simulator, ZeroTrafficWellFormed) {
    Simulator sim(quiet());
    const auto s = sim.step_tick();
    EXPECT_EQ(s.tick_index, 1u);
    for (const auto& ue : s.ues) {
        EXPECT_EQ(ue.psr, 1.0);
        EXPECT_EQ(ue.packets_sent, 0u);
        EXPECT_EQ(ue.packets_received, 0u);
    }
    EXPECT_EQ(s.aggregate_demand_mbps, 0.0);
}

TEST(Simulator, FullDeliveryAtPsrOne) {
    Simulator sim(quiet());
    const std::vector<double> r{1.5, 1.5, 1.5};
    sim.launch(r);
    for (int i = 0; i < 20; ++i) {
        const auto s = sim.step_tick();
        EXPECT_DOUBLE_EQ(s.aggregate_demand_mbps, 4.5);
        for (const auto& ue : s.ues) EXPECT_EQ(ue.packets_received, ue.packets_sent);
    }
}

TEST(Simulator, AllocationValidation) {
    Simulator sim(quiet());
    EXPECT_THROW(sim.apply_allocation(std::vector<double>{}), std::invalid_argument);
    EXPECT_THROW(sim.apply_allocation(std::vector<double>{1, -1, 1}), std::invalid_argument);
    EXPECT_THROW(ScenarioConfig{.n_ues = 0}.validate(), std::invalid_argument);
    EXPECT_THROW(Simulator(ScenarioConfig{.capacity_mbps = 0}), std::invalid_argument);
}

TEST(Simulator, AllocationTakesEffectNextTick) {
    Simulator sim(quiet());
    sim.launch(std::vector<double>{1, 1, 1});
    const auto k = sim.step_tick();
    EXPECT_DOUBLE_EQ(k.aggregate_demand_mbps, 3.0);
    sim.apply_allocation(std::vector<double>{2, 2, 2});
    // Nothing visible until the next boundary.
    EXPECT_DOUBLE_EQ(sim.state().aggregate_demand_mbps, 3.0);
    EXPECT_EQ(sim.next_allocation(), (std::vector<double>{2, 2, 2}));
    const auto k1 = sim.step_tick();
    EXPECT_EQ(k1.tick_index, k.tick_index + 1);
    EXPECT_DOUBLE_EQ(k1.aggregate_demand_mbps, 6.0);
}

TEST(Simulator, ExpectedRateNeverBelowGranted) {
    Simulator sim(quiet());
    sim.set_demand(std::vector<double>{3, 0, 1});
    sim.apply_allocation(std::vector<double>{1.5, 2, 1});
    const auto s = sim.step_tick();
    EXPECT_DOUBLE_EQ(s.ues[0].r_exp_mbps, 3.0);
    EXPECT_DOUBLE_EQ(s.ues[1].r_exp_mbps, 2.0);
    for (const auto& ue : s.ues) EXPECT_LE(ue.r_act_mbps, ue.r_exp_mbps);
}

TEST(Simulator, Deterministic) {
    auto run = [] {
        ScenarioConfig cfg;
        cfg.seed = 99;
        Simulator sim(cfg);
        std::vector<NetworkState> out;
        for (int i = 0; i < 300; ++i) {
            if (i % 50 == 0) sim.launch(std::vector<double>{0.5 * (i / 50), 4.5, 3.0});
            out.push_back(sim.step_tick());
        }
        return out;
    };
    EXPECT_EQ(run(), run());
}

TEST(Simulator, ConservationUnderNoise) {
    ScenarioConfig cfg;
    cfg.psr_noise_sigma = 0.2;
    Simulator sim(cfg);
    sim.launch(std::vector<double>{4.5, 4.5, 4.5});
    for (int i = 0; i < 500; ++i) {
        for (const auto& ue : sim.step_tick().ues) {
            ASSERT_LE(ue.packets_received, ue.packets_sent);
            ASSERT_GE(ue.psr, 0.0);
            ASSERT_LE(ue.psr, 1.0);
        }
    }
}

TEST(Simulator, BinomialDeliveryMean) {
    // 10 Mbps on a 5 Mbps cell: PSR 0.5, 100 packets per tick.
    Simulator sim(quiet(1, 5.0));
    sim.launch(std::vector<double>{10.0});
    double received = 0.0;
    for (int i = 0; i < 1000; ++i) {
        const auto s = sim.step_tick();
        ASSERT_EQ(s.ues[0].packets_sent, 100u);
        ASSERT_DOUBLE_EQ(s.ues[0].psr, 0.5);
        received += static_cast<double>(s.ues[0].packets_received);
    }
    EXPECT_NEAR(received / 1000.0, 50.0, 1.5);
}

TEST(Schedule, Examples) {
    const RateSchedule s({{0, 10}, {10, 20}});
    EXPECT_EQ(schedule_rate_at(s, 5), 10);
    EXPECT_EQ(schedule_rate_at(s, 10), 20);
    EXPECT_EQ(schedule_rate_at(s, -1), 0);
    EXPECT_EQ(schedule_rate_at(s, 1e9), 20);
    EXPECT_THROW(RateSchedule({{0, 10}, {0, 20}}), std::invalid_argument);
    EXPECT_THROW(RateSchedule({{1, 10}, {0, 20}}), std::invalid_argument);
    EXPECT_THROW(RateSchedule({{0, -1}}), std::invalid_argument);
}

TEST(Schedule, MirrorDefault) {
    const auto s = make_mirror_schedule(60.0, 6);
    const auto& cp = s.change_points();
    ASSERT_EQ(cp.size(), 7u);
    EXPECT_EQ(cp.front().t_seconds, 0.0);
    for (std::size_t i = 1; i < cp.size(); ++i) {
        EXPECT_LT(cp[i].t_seconds, 60.0);
        EXPECT_NE(cp[i].rate, cp[i - 1].rate);
        // Change times sit on 100 ms tick boundaries.
        EXPECT_NEAR(cp[i].t_seconds * 10.0, std::round(cp[i].t_seconds * 10.0), 1e-9);
    }
}

TEST(TrafficUpdate, RoundTripAndRejects) {
    const TrafficUpdate u{17, {1.0, 2.5}};
    EXPECT_EQ(decode_traffic_update(encode_traffic_update(u)), u);
    EXPECT_THROW(decode_traffic_update(link::to_bytes("{}")), link::EnvelopeError);
    EXPECT_THROW(decode_traffic_update(link::to_bytes("[")), link::EnvelopeError);
}

namespace {

link::MessageEnvelope update(std::uint64_t tick, std::vector<double> rates, std::uint64_t seq = 0) {
    return {std::string(link::topics::kRealTraffic), seq, 1000, link::EnvelopeKind::TrafficUpdate,
            encode_traffic_update({tick, std::move(rates)})};
}

}  // namespace

TEST(TwinMirror, DuplicateIsIgnored) {
    Simulator once(quiet(1)), twice(quiet(1));
    TwinMirror m1(once), m2(twice);
    const auto e = update(5, {2.0});
    EXPECT_EQ(m1.apply_mirror_update(e, 3000), MirrorOutcome::Applied);
    EXPECT_EQ(m2.apply_mirror_update(e, 3000), MirrorOutcome::Applied);
    EXPECT_EQ(m2.apply_mirror_update(e, 4000), MirrorOutcome::Stale);
    EXPECT_EQ(m2.apply_mirror_update(update(4, {9.0}), 4000), MirrorOutcome::Stale);
    EXPECT_EQ(once.step_tick(), twice.step_tick());
    EXPECT_EQ(m2.stale(), 2u);
    EXPECT_EQ(m2.applied(), 1u);
    EXPECT_DOUBLE_EQ(m1.last_delay_ms(), 2.0);
}

TEST(TwinMirror, RejectsBadUpdates) {
    Simulator twin(quiet(2));
    TwinMirror m(twin);
    EXPECT_EQ(m.apply_mirror_update(update(1, {1.0}), 0), MirrorOutcome::Rejected);  // wrong UE count
    auto wrong_kind = update(1, {1.0, 1.0});
    wrong_kind.kind = link::EnvelopeKind::BenchPing;
    EXPECT_EQ(m.apply_mirror_update(wrong_kind, 0), MirrorOutcome::Rejected);
    EXPECT_EQ(m.rejected(), 2u);
    EXPECT_FALSE(m.last_tick());
}

TEST(TwinMirror, EndToEndRateChange) {
    broker::TcpBroker broker(net::Endpoint{"127.0.0.1", 0});
    broker.start();
    link::LinkOptions ro{.broker = broker.endpoint(), .client_id = "real", .default_qos = mqtt::QoS::AtLeastOnce};
    link::LinkOptions to = ro;
    to.client_id = "twin";
    link::LinkEndpoint real_link(ro), twin_link(to);
    real_link.connect();
    twin_link.connect();
    twin_link.subscribe(std::string(link::topics::kRealTraffic), mqtt::QoS::AtLeastOnce);

    // 10 -> 20 pps at t = 10 s on 100 ms ticks.
    const RateSchedule sched({{0, 10}, {10, 20}});
    Simulator real(quiet(1)), twin(quiet(1));
    TwinMirror mirror(twin);
    for (int k = 0; k < 120; ++k) {
        const double t = k * 0.1;
        real.apply_allocation(std::vector<double>{pps_to_mbps(sched.rate_at(t))});
        const auto rs = real.step_tick();
        publish_observation(rs, real_link);
        auto got = twin_link.wait_for(link::topics::kRealTraffic, std::chrono::milliseconds{2000});
        ASSERT_TRUE(got);
        ASSERT_EQ(mirror.apply_mirror_update(got->envelope, link::now_us()), MirrorOutcome::Applied);
        const auto ts = twin.step_tick();
        // The twin's tick k runs with the rate the real side used on tick k.
        ASSERT_DOUBLE_EQ(ts.ues[0].r_act_mbps, rs.ues[0].r_act_mbps) << "tick " << k;
        ASSERT_GE(mirror.last_delay_ms(), 0.0);
    }
    EXPECT_DOUBLE_EQ(twin.state().ues[0].r_act_mbps, pps_to_mbps(20));
    EXPECT_EQ(twin_link.stats().seq_gaps, 0u);
    EXPECT_EQ(mirror.stale(), 0u);
    real_link.close();
    twin_link.close();
    broker.stop();
}
