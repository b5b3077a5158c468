#include "twinet/app/cli.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/ranges.h>
#include <signal.h>
#include <spdlog/spdlog.h>

#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <iostream>

#include "twinet/app/experiments.hpp"

namespace twinet::app {

namespace fs = std::filesystem;

void configure_logging() {
    const char* env = std::getenv("TWINET_LOG_LEVEL");
    auto level = spdlog::level::warn;
    if (env && *env) {
        level = spdlog::level::from_str(env);
        // from_str() maps unknown names to off
        if (level == spdlog::level::off && std::string_view(env) != "off") level = spdlog::level::warn;
    }
    spdlog::set_level(level);
}

namespace {

struct Common {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out = "results";
    std::string broker;
};

void add_common(CLI::App* cmd, Common& c, bool with_broker = true) {
    cmd->add_option("--config", c.config, "JSON scenario file")->check(CLI::ExistingFile);
    cmd->add_option("--seed", c.seed, "run seed (overrides the scenario file)");
    cmd->add_option("--out", c.out, "output directory")->capture_default_str();
    if (with_broker) cmd->add_option("--broker", c.broker, "external broker host:port (default: in-process)");
}

Settings resolve(const Common& c) {
    Settings s = c.config.empty() ? Settings{} : load_settings(c.config);
    if (c.seed) s.seed = *c.seed;
    if (!c.broker.empty()) s.broker = net::Endpoint::parse(c.broker);
    return s;
}

fs::path out_file(const Common& c, std::string_view name) {
    fs::create_directories(c.out);
    return fs::path(c.out) / name;
}

void emit(const Common& c, std::string_view name, const Table& t) {
    const auto path = out_file(c, name);
    write_metrics_csv(t, path);
    fmt::print("wrote {}\n", path.string());
}

int serve_broker(const std::string& bind, double run_for_s, const Common& c) {
    sigset_t signals;
    sigemptyset(&signals);
    sigaddset(&signals, SIGINT);
    sigaddset(&signals, SIGTERM);
    // Block before any broker thread exists so they all inherit the mask.
    pthread_sigmask(SIG_BLOCK, &signals, nullptr);

    broker::TcpBroker broker(net::Endpoint::parse(bind));
    broker.start();
    fmt::print("broker listening on {}:{}\n", net::Endpoint::parse(bind).host, broker.port());
    std::fflush(stdout);

    const auto deadline = std::chrono::steady_clock::now() + std::chrono::duration<double>(run_for_s);
    while (run_for_s <= 0.0 || std::chrono::steady_clock::now() < deadline) {
        timespec tick{0, 100'000'000};
        if (sigtimedwait(&signals, nullptr, &tick) > 0) break;
    }
    broker.stop();
    pthread_sigmask(SIG_UNBLOCK, &signals, nullptr);

    const auto st = broker.stats();
    Table t;
    t.schema = {{"connections_accepted", ColumnType::Int}, {"sessions_evicted", ColumnType::Int},
                {"protocol_errors", ColumnType::Int},      {"publishes_received", ColumnType::Int},
                {"publishes_routed", ColumnType::Int},     {"deliveries", ColumnType::Int},
                {"bytes_in", ColumnType::Int},             {"bytes_out", ColumnType::Int}};
    auto v = [](std::uint64_t x) { return Cell{static_cast<std::int64_t>(x)}; };
    t.rows.push_back({v(st.connections_accepted), v(st.sessions_evicted), v(st.protocol_errors),
                      v(st.publishes_received), v(st.publishes_routed), v(st.deliveries), v(st.bytes_in),
                      v(st.bytes_out)});
    emit(c, "broker_stats.csv", t);
    return 0;
}

std::vector<std::size_t> parse_sizes(const std::string& text) {
    std::vector<std::size_t> sizes;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const auto comma = text.find(',', pos);
        const auto item = text.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
        std::size_t used = 0;
        const auto v = std::stoull(item, &used);
        if (used != item.size()) throw CLI::ValidationError("--sizes", "not a number: " + item);
        sizes.push_back(static_cast<std::size_t>(v));
        if (comma == std::string::npos) break;
        pos = comma + 1;
    }
    return sizes;
}

}  // namespace

int run_command(const std::vector<std::string>& args) {
    configure_logging();

    CLI::App app{"twinet: digital-twin link, network simulator and controllers", "twinet"};
    app.require_subcommand(1);

    Common common;

    auto* broker_cmd = app.add_subcommand("broker", "run the MQTT broker until SIGINT/SIGTERM");
    std::string bind = "0.0.0.0:1883";
    double run_for = 0.0;
    broker_cmd->add_option("--bind", bind, "listen address host:port")->capture_default_str();
    broker_cmd->add_option("--run-for", run_for, "stop after this many seconds (0: until signalled)");
    add_common(broker_cmd, common, false);

    auto* bench_cmd = app.add_subcommand("bench", "one-way latency per payload size and direction");
    std::string sizes;
    std::optional<std::size_t> samples, warmup;
    bench_cmd->add_option("--sizes", sizes, "comma-separated payload sizes in bytes");
    bench_cmd->add_option("--samples", samples, "samples per size and direction");
    bench_cmd->add_option("--warmup", warmup, "unrecorded rounds per size and direction");
    add_common(bench_cmd, common);

    auto* mirror_cmd = app.add_subcommand("mirror", "mirror a rate schedule from the real cell into the twin");
    std::optional<double> duration, speedup;
    std::optional<std::size_t> changes;
    mirror_cmd->add_option("--duration", duration, "schedule length in seconds");
    mirror_cmd->add_option("--changes", changes, "number of rate changes");
    mirror_cmd->add_option("--speedup", speedup, "run the tick clock this many times faster than real time");
    add_common(mirror_cmd, common);

    auto* sadr_cmd = app.add_subcommand("sadr", "escalating-demand scenario with and without twin gating");
    std::optional<std::size_t> reps;
    std::optional<double> dwell;
    std::string transport;
    bool gated = false, ungated = false, both = false;
    sadr_cmd->add_option("--reps", reps, "repetitions");
    sadr_cmd->add_option("--dwell", dwell, "seconds of simulated time per demand instance");
    sadr_cmd->add_option("--transport", transport, "twin evaluation over 'local' calls or the 'link'")
        ->check(CLI::IsMember({"local", "link"}));
    auto* g = sadr_cmd->add_flag("--gated", gated, "gated arm only");
    auto* u = sadr_cmd->add_flag("--ungated", ungated, "ungated arm only");
    auto* b = sadr_cmd->add_flag("--both", both, "both arms (default)");
    g->excludes(u)->excludes(b);
    u->excludes(b);
    add_common(sadr_cmd, common);

    auto* pilot_cmd = app.add_subcommand("pilot", "jam detection with twin-side model redeployment");
    std::string scenario;
    pilot_cmd->add_option("--scenario", scenario, "10mhz, 20mhz, 40mhz or all")
        ->check(CLI::IsMember({"10mhz", "20mhz", "40mhz", "all"}));
    add_common(pilot_cmd, common);

    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);
        fmt::print(stderr, "twinet: {}\n\n{}", e.what(), app.help());
        return 2;
    }

    try {
        if (broker_cmd->parsed()) return serve_broker(bind, run_for, common);

        Settings s = resolve(common);
        if (bench_cmd->parsed()) {
            if (!sizes.empty()) s.bench.sizes = parse_sizes(sizes);
            if (samples) s.bench.samples = *samples;
            if (warmup) s.bench.warmup = *warmup;
            s.validate();
            const auto r = run_bench(s);
            emit(common, "bench_latency.csv", r.table);
            for (const auto& rep : r.reports) {
                fmt::print("{:>8} B {:<12} mean {:8.3f} ms  p50 {:8.3f}  p99 {:8.3f}\n", rep.payload_size,
                           link::to_string(rep.direction), rep.mean_ms, rep.p50_ms, rep.p99_ms);
            }
        } else if (mirror_cmd->parsed()) {
            if (duration) s.mirror.duration_s = *duration;
            if (changes) s.mirror.changes = *changes;
            if (speedup) s.mirror.speedup = *speedup;
            s.validate();
            const auto r = run_mirror(s);
            emit(common, "mirror_fig2.csv", r.fig2);
            emit(common, "mirror_ticks.csv", r.ticks);
            emit(common, "mirror_changes.csv", r.changes);
            fmt::print("{} changes, twin matched all: {}, mean change delay {:.3f} ms, stale {}, duplicates {}\n",
                       r.change_log.size(), r.all_changes_matched, r.mean_change_delay_ms, r.stale, r.duplicates);
        } else if (sadr_cmd->parsed()) {
            auto& e = s.sadr.escalation;
            if (reps) e.repetitions = *reps;
            if (dwell) e.dwell_s = *dwell;
            if (!transport.empty()) s.sadr.transport = transport;
            if (gated || ungated) {
                e.run_gated = gated;
                e.run_ungated = ungated;
            } else if (both) {
                e.run_gated = e.run_ungated = true;
            }
            s.validate();
            const auto r = run_sadr(s);
            emit(common, "sadr_rewards.csv", r.rewards);
            emit(common, "sadr_cumulative.csv", r.cumulative);
            emit(common, "sadr_summary.csv", r.summary);
            if (e.run_gated) emit(common, "sadr_decisions.csv", r.decisions);
            fmt::print("app_requirements {:.6f}{}\n", r.raw.app_requirements,
                       r.raw.flagged ? " (twin unreachable at least once; safe setup applied)" : "");
            if (e.run_gated && e.run_ungated) {
                const auto n = e.instances.size();
                const auto top = compare_arms(r.raw, n - n / 3, n);
                fmt::print("top third: gated {:.4f} ungated {:.4f} gain {:+.1f}%\n", top.gated_mean, top.ungated_mean,
                           100.0 * top.relative_gain);
            }
        } else if (pilot_cmd->parsed()) {
            if (!scenario.empty()) {
                s.pilot.scenarios = scenario == "all" ? pilot::scenario_names() : std::vector<std::string>{scenario};
            }
            s.validate();
            const auto r = run_pilot(s);
            emit(common, "pilot_table2.csv", r.table2);
            emit(common, "pilot_table3.csv", r.table3);
            emit(common, "pilot_detection.csv", r.detection);
            bool ok = true;
            for (const auto& sc : r.scenarios) {
                fmt::print("{}: {}\n", sc.name,
                           sc.completed ? fmt::format("test acc {:.4f}, redeploy total {:.3f} s, relocated jam {}",
                                                      sc.test_accuracy, sc.timing.total_deployment_s,
                                                      sc.relocated_subcarrier_ok ? "detected" : "MISSED")
                                        : "failed: " + sc.error);
                ok = ok && sc.completed;
            }
            return ok ? 0 : 1;
        }
        return 0;
    } catch (const std::exception& e) {
        fmt::print(stderr, "twinet: {}\n", e.what());
        return 1;
    }
}

}  // namespace twinet::app
