#include "twinet/app/experiments.hpp"

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <numeric>
#include <thread>

#include "twinet/link/clock.hpp"
#include "twinet/netsim/mirror.hpp"
#include "twinet/pilot/redeploy.hpp"
#include "twinet/util/seed.hpp"

namespace twinet::app {

namespace {

using std::chrono::milliseconds;

Column int_col(std::string name) { return {std::move(name), ColumnType::Int}; }
Column text_col(std::string name) { return {std::move(name), ColumnType::Text}; }
Column real_col(std::string name, int precision, bool wall_clock = false) {
    return {std::move(name), ColumnType::Real, precision, wall_clock};
}

Cell i64(std::uint64_t v) { return static_cast<std::int64_t>(v); }

// Stream ids for mix_seed(settings.seed, id).
enum Stream : std::uint64_t {
    kBenchPayload = 1,
    kMirrorReal = 10,
    kMirrorTwin = 11,
    kSadrReal = 20,
    kSadrTwin = 21,
    kPilotBootstrap = 100,
    kPilotSelect = 200,
    kPilotRedeploy = 300,
    kPilotAttack = 400,
    kPilotDuring = 500,
    kPilotRelocated = 600,
    kPilotClean = 700,
};

/// Stops and joins a service thread on scope exit.
class ServiceThread {
public:
    template <typename F>
    explicit ServiceThread(F&& body) : thread_([this, body = std::forward<F>(body)] { body(stop_); }) {}
    ~ServiceThread() {
        stop_ = true;
        if (thread_.joinable()) thread_.join();
    }

private:
    std::atomic<bool> stop_{false};
    std::thread thread_;
};

}  // namespace

BrokerScope::BrokerScope(const std::optional<net::Endpoint>& external) {
    if (external) {
        endpoint_ = *external;
        return;
    }
    broker_ = std::make_unique<broker::TcpBroker>(net::Endpoint{"127.0.0.1", 0});
    broker_->start();
    endpoint_ = broker_->endpoint();
}

BrokerScope::~BrokerScope() {
    if (broker_) broker_->stop();
}

link::LinkOptions link_options(const net::Endpoint& broker, std::string client_id) {
    link::LinkOptions o;
    o.broker = broker;
    o.client_id = std::move(client_id);
    return o;
}

BenchResult run_bench(const Settings& settings) {
    BrokerScope broker(settings.broker);
    link::LinkEndpoint real(link_options(broker.endpoint(), "bench-real"));
    link::LinkEndpoint twin(link_options(broker.endpoint(), "bench-twin"));
    real.connect();
    twin.connect();
    link::prepare_latency_bench(real, twin);

    link::BenchOptions opts;
    opts.sizes = settings.bench.sizes;
    opts.samples_per_size = settings.bench.samples;
    opts.warmup = settings.bench.warmup;
    opts.seed = mix_seed(settings.seed, kBenchPayload);

    BenchResult out;
    out.reports = link::run_latency_bench(real, twin, opts);
    real.close();
    twin.close();

    out.table.schema = {int_col("size_bytes"),         text_col("direction"),
                        real_col("mean_ms", 3, true),  real_col("p50_ms", 3, true),
                        real_col("p99_ms", 3, true),   int_col("n")};
    for (const auto& r : out.reports) {
        out.table.rows.push_back({i64(r.payload_size), std::string(link::to_string(r.direction)), r.mean_ms, r.p50_ms,
                                  r.p99_ms, i64(r.samples_ms.size())});
    }
    return out;
}

MirrorResult run_mirror(const Settings& settings) {
    const auto& ms = settings.mirror;
    const netsim::RateSchedule schedule =
        ms.schedule.empty() ? netsim::make_mirror_schedule(ms.duration_s, ms.changes) : netsim::RateSchedule(ms.schedule);
    const double tick_s = ms.scenario.tick_ms / 1000.0;
    const auto n_ticks = static_cast<std::uint64_t>(std::llround(ms.duration_s / tick_s));
    const auto n_ues = ms.scenario.n_ues;

    BrokerScope broker(settings.broker);
    auto real_opts = link_options(broker.endpoint(), "mirror-real");
    real_opts.topic_qos.emplace(link::topics::kRealTraffic, mqtt::QoS::AtLeastOnce);
    link::LinkEndpoint real_link(real_opts);
    link::LinkEndpoint twin_link(link_options(broker.endpoint(), "mirror-twin"));
    real_link.connect();
    twin_link.connect();
    twin_link.subscribe(std::string(link::topics::kRealTraffic), mqtt::QoS::AtLeastOnce);

    auto real_cfg = ms.scenario;
    real_cfg.seed = mix_seed(settings.seed, kMirrorReal);
    auto twin_cfg = ms.scenario;
    twin_cfg.seed = mix_seed(settings.seed, kMirrorTwin);
    netsim::Simulator real(real_cfg);
    netsim::Simulator twin(twin_cfg);
    netsim::TwinMirror mirror(twin);

    // Indexed by tick - 1. The twin thread writes only its own vectors.
    std::vector<netsim::NetworkState> real_states(n_ticks);
    std::vector<std::optional<netsim::NetworkState>> twin_states(n_ticks);
    std::vector<double> twin_delay_ms(n_ticks, 0.0);

    std::thread twin_thread([&] {
        const auto deadline = std::chrono::steady_clock::now() +
                              milliseconds(static_cast<long>(ms.duration_s * 1000.0 / ms.speedup) + 10'000);
        while (!mirror.last_tick() || *mirror.last_tick() < n_ticks) {
            if (std::chrono::steady_clock::now() > deadline) {
                spdlog::error("mirror: twin gave up waiting for tick {}", n_ticks);
                break;
            }
            auto msg = twin_link.poll(milliseconds{100});
            if (!msg || msg->envelope.topic != link::topics::kRealTraffic) continue;
            if (mirror.apply_mirror_update(msg->envelope, link::now_us()) != netsim::MirrorOutcome::Applied) continue;
            const auto tick = *mirror.last_tick();
            auto state = twin.step_tick();
            if (tick >= 1 && tick <= n_ticks) {
                twin_states[tick - 1] = std::move(state);
                twin_delay_ms[tick - 1] = mirror.last_delay_ms();
            }
        }
    });

    const auto pace = std::chrono::duration<double>(tick_s / ms.speedup);
    const auto start = std::chrono::steady_clock::now();
    for (std::uint64_t k = 1; k <= n_ticks; ++k) {
        const double t = static_cast<double>(k - 1) * ms.scenario.tick_ms / 1000.0;
        const double mbps = netsim::pps_to_mbps(schedule.rate_at(t));
        real.apply_allocation(std::vector<double>(n_ues, mbps));
        real_states[k - 1] = real.step_tick();
        netsim::publish_observation(real_states[k - 1], real_link);
        std::this_thread::sleep_until(start + std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                                                  pace * static_cast<double>(k)));
    }
    twin_thread.join();

    MirrorResult out;
    out.ticks_run = n_ticks;
    out.applied = mirror.applied();
    out.stale = mirror.stale();
    out.rejected = mirror.rejected();
    const auto tstats = twin_link.stats();
    out.duplicates = tstats.seq_duplicates;
    out.gaps = tstats.seq_gaps;
    real_link.close();
    twin_link.close();

    out.fig2.schema = {real_col("t_s", 1),       real_col("real_pps", 1),  real_col("twin_pps", 1),
                       real_col("real_mbps", 3), real_col("twin_mbps", 3), real_col("mirror_delay_ms", 3, true)};
    out.ticks.schema = {int_col("tick"),        int_col("ue"),       real_col("r_exp", 3),
                        real_col("r_act", 3),   real_col("psr", 6),  int_col("sent"),
                        int_col("received"),    real_col("mirror_delay_ms", 3, true)};
    out.changes.schema = {int_col("change"), real_col("t_s", 1),         real_col("rate_pps", 1),
                          int_col("tick"),   int_col("twin_matched"),    real_col("mirror_delay_ms", 3, true)};

    double prev_rate = -1.0;
    double delay_sum = 0.0;
    out.all_changes_matched = true;
    for (std::uint64_t k = 1; k <= n_ticks; ++k) {
        const auto& rs = real_states[k - 1];
        const auto& ts = twin_states[k - 1];
        const double t = static_cast<double>(k - 1) * ms.scenario.tick_ms / 1000.0;
        const double real_mbps = rs.ues.front().r_act_mbps;
        const double twin_mbps = ts ? ts->ues.front().r_act_mbps : 0.0;
        out.fig2.rows.push_back({t, netsim::mbps_to_pps(real_mbps), netsim::mbps_to_pps(twin_mbps), real_mbps, twin_mbps,
                                 twin_delay_ms[k - 1]});
        if (ts) {
            for (std::size_t u = 0; u < ts->ues.size(); ++u) {
                const auto& ue = ts->ues[u];
                out.ticks.rows.push_back({i64(k), i64(u), ue.r_exp_mbps, ue.r_act_mbps, ue.psr, i64(ue.packets_sent),
                                          i64(ue.packets_received), twin_delay_ms[k - 1]});
            }
        }
        const double rate = schedule.rate_at(t);
        if (k > 1 && rate != prev_rate) {
            MirrorChange c{out.change_log.size() + 1, t, rate, k, false, twin_delay_ms[k - 1]};
            c.twin_matched = ts.has_value() && ts->ues.size() == rs.ues.size();
            for (std::size_t u = 0; c.twin_matched && u < rs.ues.size(); ++u) {
                c.twin_matched = ts->ues[u].r_act_mbps == rs.ues[u].r_act_mbps;
            }
            out.all_changes_matched = out.all_changes_matched && c.twin_matched;
            delay_sum += c.delay_ms;
            out.changes.rows.push_back(
                {i64(c.index), c.t_s, c.rate_pps, i64(c.tick), std::int64_t{c.twin_matched}, c.delay_ms});
            out.change_log.push_back(c);
        }
        prev_rate = rate;
    }
    if (!out.change_log.empty()) out.mean_change_delay_ms = delay_sum / static_cast<double>(out.change_log.size());
    return out;
}

SadrRunResult run_sadr(const Settings& settings) {
    auto options = settings.sadr.escalation;
    options.scenario.seed = mix_seed(settings.seed, kSadrReal);
    auto twin_cfg = options.scenario;
    twin_cfg.seed = mix_seed(settings.seed, kSadrTwin);

    SadrRunResult out;
    if (settings.sadr.transport == "link") {
        BrokerScope broker(settings.broker);
        link::LinkEndpoint real(link_options(broker.endpoint(), "sadr-real"));
        link::LinkEndpoint twin(link_options(broker.endpoint(), "sadr-twin"));
        real.connect();
        twin.connect();
        sadr::TwinEvalService service(twin_cfg);
        twin.subscribe(std::string(link::topics::kRealRequest), mqtt::QoS::AtLeastOnce);
        {
            ServiceThread serving([&](const std::atomic<bool>& stop) { service.serve(twin, stop); });
            sadr::LinkEvalTransport transport(real);
            out.raw = sadr::run_escalating_scenario(options, transport);
        }
        real.close();
        twin.close();
    } else {
        sadr::LocalEvalTransport transport(twin_cfg);
        out.raw = sadr::run_escalating_scenario(options, transport);
    }

    out.rewards.schema = {int_col("instance"), text_col("arm"), int_col("repetition"), real_col("mean_reward", 6)};
    out.cumulative.schema = {int_col("instance"), text_col("arm"), int_col("repetition"),
                             real_col("cumulative_reward", 6)};
    out.decisions.schema = {int_col("instance"), int_col("repetition"), real_col("demand_mbps", 3),
                            text_col("decision"), text_col("applied_mbps")};
    for (const auto& r : out.raw.rows) {
        const std::string arm(sadr::to_string(r.arm));
        out.rewards.rows.push_back({i64(r.instance), arm, i64(r.repetition), r.mean_reward});
        out.cumulative.rows.push_back({i64(r.instance), arm, i64(r.repetition), r.cumulative_reward});
        if (r.arm == sadr::Arm::Gated) {
            out.decisions.rows.push_back({i64(r.instance), i64(r.repetition), r.demand_mbps,
                                          std::string(sadr::to_string(r.decision)),
                                          fmt::format("{:.2f}", fmt::join(r.applied, ";"))});
        }
    }

    out.summary.schema = {int_col("instance"), real_col("demand_mbps", 3), real_col("gated_mean_reward", 6),
                          real_col("ungated_mean_reward", 6)};
    const auto n_inst = options.instances.size();
    for (std::size_t i = 0; i < n_inst; ++i) {
        const auto c = compare_arms(out.raw, i, i + 1);
        const auto req = sadr::TrafficRequest::from_actions(0, options.instances[i]);
        out.summary.rows.push_back(
            {i64(i), std::accumulate(req.risk_vector.begin(), req.risk_vector.end(), 0.0), c.gated_mean, c.ungated_mean});
    }
    return out;
}

ArmComparison compare_arms(const sadr::EscalationResult& result, std::size_t first, std::size_t last) {
    double g = 0.0, u = 0.0;
    std::size_t ng = 0, nu = 0;
    for (const auto& r : result.rows) {
        if (r.instance < first || r.instance >= last) continue;
        if (r.arm == sadr::Arm::Gated) {
            g += r.mean_reward;
            ++ng;
        } else {
            u += r.mean_reward;
            ++nu;
        }
    }
    ArmComparison c;
    c.gated_mean = ng ? g / static_cast<double>(ng) : 0.0;
    c.ungated_mean = nu ? u / static_cast<double>(nu) : 0.0;
    c.relative_gain = c.ungated_mean != 0.0 ? c.gated_mean / c.ungated_mean - 1.0 : 0.0;
    return c;
}

namespace {

/// Feeds frames until the loop emits an event or `limit` frames pass.
/// Returns the 1-based count of frames it took.
std::optional<std::size_t> frames_until_event(pilot::DetectionLoop& loop, const pilot::PilotConfig& pilots,
                                              std::size_t jam_class, std::mt19937_64& rng, std::size_t limit,
                                              std::optional<pilot::JamEvent>* event = nullptr) {
    for (std::size_t n = 1; n <= limit; ++n) {
        if (auto ev = loop.process(pilot::generate_frame(pilots, jam_class, rng))) {
            if (event) *event = ev;
            return n;
        }
    }
    return std::nullopt;
}

PilotScenarioOutcome run_pilot_scenario(const Settings& settings, std::size_t index, const std::string& name,
                                        const net::Endpoint& broker) {
    const auto& ps = settings.pilot;
    PilotScenarioOutcome out;
    out.name = name;
    out.initial = pilot::scenario_pilots(name);
    auto seed = [&](Stream s) { return mix_seed(settings.seed, s + index); };

    link::LinkEndpoint bs_link(link_options(broker, "bs-" + name));
    link::LinkEndpoint dt_link(link_options(broker, "dt-" + name));
    bs_link.connect();
    dt_link.connect();
    pilot::prepare_base_station_link(bs_link);
    dt_link.subscribe(std::string(link::topics::kModelRequest), mqtt::QoS::AtLeastOnce);
    const pilot::ModelFactory factory(ps.factory);
    std::optional<ServiceThread> twin_side;
    twin_side.emplace([&](const std::atomic<bool>& stop) { factory.serve(dt_link, stop); });

    try {
        auto boot = pilot::request_model(bs_link, out.initial, seed(kPilotBootstrap), ps.timeout);
        pilot::BaseStation bs(std::move(boot.model));
        const auto gen0 = bs.current()->generation;

        // Redeploy is launched from the loop's trigger and runs while the loop keeps classifying.
        std::thread redeploy;
        std::optional<pilot::RedeployOutcome> redeployed;
        std::string redeploy_error;
        std::atomic<bool> redeploy_done{false};
        pilot::DetectionLoop loop(
            bs,
            [&](const pilot::JamEvent& ev, const pilot::Deployment& d) {
                if (redeploy.joinable() || d.generation != gen0) return;
                out.relocated = pilot::select_new_pilots(d.pilots, ev.subcarrier, seed(kPilotSelect));
                redeploy = std::thread([&] {
                    try {
                        redeployed = pilot::run_redeploy_pipeline(bs, bs_link, out.relocated, seed(kPilotRedeploy),
                                                                  ps.timeout);
                    } catch (const std::exception& e) {
                        redeploy_error = e.what();
                    }
                    redeploy_done = true;
                });
            },
            ps.debounce);

        std::mt19937_64 attack(seed(kPilotAttack));
        std::optional<pilot::JamEvent> first;
        out.initial_detect_frames = frames_until_event(loop, out.initial, 1, attack, ps.max_detect_frames, &first);
        if (first) out.initial_subcarrier = first->subcarrier;
        if (!redeploy.joinable()) throw std::runtime_error("jammer on the initial pilots went undetected");

        // Snapshot checker: every observed deployment must pair a model with its own pilots.
        std::thread checker([&] {
            while (!redeploy_done) {
                const auto d = bs.current();
                ++out.snapshots_checked;
                const bool known = (d->generation == gen0 && d->pilots == out.initial) ||
                                   (d->generation == gen0 + 1 && d->pilots == out.relocated);
                if (!known || d->model.pilot_config != d->pilots) ++out.mixed_observations;
                std::this_thread::sleep_for(std::chrono::microseconds{200});
            }
        });
        // The jammer stays on the old pilot until the swap; the loop keeps running meanwhile.
        std::mt19937_64 during(seed(kPilotDuring));
        while (!redeploy_done) {
            loop.process(pilot::generate_frame(out.initial, 1, during));
            std::this_thread::sleep_for(milliseconds{1});
        }
        redeploy.join();
        checker.join();
        if (!redeployed) throw std::runtime_error("redeploy failed: " + redeploy_error);

        out.timing = redeployed->timing;
        out.train_accuracy = redeployed->train_accuracy;
        out.test_accuracy = redeployed->test_accuracy;

        // Jammer relocates to the first new pilot. A fresh loop keeps the count
        // independent of how many frames went by during the redeploy.
        pilot::DetectionLoop after(bs, {}, ps.debounce);
        std::mt19937_64 relocated(seed(kPilotRelocated));
        std::optional<pilot::JamEvent> ev;
        out.relocated_detect_frames = frames_until_event(after, out.relocated, 1, relocated, ps.max_detect_frames, &ev);
        if (ev) {
            out.relocated_subcarrier = ev->subcarrier;
            out.relocated_subcarrier_ok =
                ev->generation == redeployed->generation && ev->subcarrier == out.relocated.pilot_indices.front();
        }

        pilot::DetectionLoop clean_loop(bs, {}, ps.debounce);
        std::mt19937_64 clean(seed(kPilotClean));
        for (std::size_t i = 0; i < ps.clean_frames; ++i) clean_loop.process(pilot::generate_frame(out.relocated, 0, clean));
        out.false_alarms = clean_loop.events();
        out.completed = true;
    } catch (const std::exception& e) {
        out.error = e.what();
        spdlog::error("pilot {}: {}", name, e.what());
    }
    twin_side.reset();
    bs_link.close();
    dt_link.close();
    return out;
}

}  // namespace

PilotRunResult run_pilot(const Settings& settings) {
    BrokerScope broker(settings.broker);
    PilotRunResult out;
    out.table2.schema = {text_col("channel_size"), int_col("pilot_amount"), real_col("training_accuracy", 4),
                         real_col("testing_accuracy", 4)};
    out.table3.schema = {text_col("channel_size"),
                         real_col("data_transfer_s", 6, true),
                         real_col("data_collection_s", 6, true),
                         real_col("data_processing_s", 6, true),
                         real_col("model_creation_s", 6, true),
                         real_col("total_deployment_s", 6, true)};
    out.detection.schema = {text_col("channel_size"), text_col("phase"), int_col("frames"), int_col("events"),
                            int_col("subcarrier")};

    const auto& all = pilot::scenario_names();
    for (const auto& name : settings.pilot.scenarios) {
        const auto index = static_cast<std::size_t>(std::find(all.begin(), all.end(), name) - all.begin());
        auto sc = run_pilot_scenario(settings, index, name, broker.endpoint());
        const std::string label = sc.initial.label;
        if (sc.completed) {
            out.table2.rows.push_back({label, i64(sc.initial.pilots()), sc.train_accuracy, sc.test_accuracy});
            const auto& t = sc.timing;
            out.table3.rows.push_back({label, t.data_transfer_s, t.data_collection_s, t.data_processing_s,
                                       t.model_creation_s, t.total_deployment_s});
        }
        auto frames = [](const std::optional<std::size_t>& f) { return f ? i64(*f) : Cell{std::int64_t{-1}}; };
        out.detection.rows.push_back({label, std::string("initial"), frames(sc.initial_detect_frames),
                                      std::int64_t{sc.initial_detect_frames.has_value()},
                                      sc.initial_detect_frames ? i64(sc.initial_subcarrier)
                                                               : Cell{std::int64_t{-1}}});
        out.detection.rows.push_back({label, std::string("relocated"), frames(sc.relocated_detect_frames),
                                      std::int64_t{sc.relocated_detect_frames.has_value()},
                                      sc.relocated_detect_frames ? i64(sc.relocated_subcarrier) : Cell{std::int64_t{-1}}});
        out.detection.rows.push_back({label, std::string("clean"), i64(settings.pilot.clean_frames),
                                      i64(sc.false_alarms), std::int64_t{-1}});
        out.scenarios.push_back(std::move(sc));
    }
    return out;
}

}  // namespace twinet::app
