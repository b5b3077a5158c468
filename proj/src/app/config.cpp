#include "twinet/app/config.hpp"

#include <fmt/format.h>
#include <json.hpp>

#include <fstream>
#include <set>
#include <sstream>

namespace twinet::app {

using json = nlohmann::json;

namespace {

void only_keys(const json& j, std::string_view where, std::initializer_list<std::string_view> allowed) {
    if (!j.is_object()) throw ConfigError(fmt::format("'{}' must be an object", where));
    const std::set<std::string_view> ok(allowed);
    for (const auto& [key, _] : j.items()) {
        if (!ok.contains(key)) throw ConfigError(fmt::format("unknown key '{}.{}'", where, key));
    }
}

template <typename T>
void read(const json& j, const char* key, T& into) {
    if (auto it = j.find(key); it != j.end()) into = it->get<T>();
}

void read_scenario(const json& j, netsim::ScenarioConfig& s) {
    read(j, "n_ues", s.n_ues);
    read(j, "capacity_mbps", s.capacity_mbps);
    read(j, "tick_ms", s.tick_ms);
    read(j, "psr_noise_sigma", s.psr_noise_sigma);
}

void read_bench(const json& j, BenchSettings& b) {
    only_keys(j, "bench", {"sizes", "samples", "warmup"});
    read(j, "sizes", b.sizes);
    read(j, "samples", b.samples);
    read(j, "warmup", b.warmup);
}

void read_mirror(const json& j, MirrorSettings& m) {
    only_keys(j, "mirror",
              {"n_ues", "capacity_mbps", "tick_ms", "psr_noise_sigma", "duration_s", "changes", "speedup", "schedule"});
    read_scenario(j, m.scenario);
    read(j, "duration_s", m.duration_s);
    read(j, "changes", m.changes);
    read(j, "speedup", m.speedup);
    if (auto it = j.find("schedule"); it != j.end()) {
        m.schedule.clear();
        for (const auto& cp : *it) m.schedule.push_back({cp.at(0).get<double>(), cp.at(1).get<double>()});
    }
}

void read_sadr(const json& j, SadrSettings& s) {
    only_keys(j, "sadr",
              {"n_ues", "capacity_mbps", "tick_ms", "psr_noise_sigma", "risk_threshold", "app_requirements",
               "safe_setup", "twin_horizon_ticks", "moderate_actions", "instances", "dwell_s", "repetitions", "arms",
               "transport", "eval_timeout_ms"});
    auto& e = s.escalation;
    read_scenario(j, e.scenario);
    read(j, "risk_threshold", e.sadr.risk_threshold);
    if (auto it = j.find("app_requirements"); it != j.end() && !it->is_null()) {
        e.sadr.app_requirements = it->get<double>();
        e.derive_requirements = false;
    }
    read(j, "safe_setup", e.sadr.safe_setup);
    read(j, "twin_horizon_ticks", e.sadr.twin_horizon_ticks);
    read(j, "moderate_actions", e.moderate_actions);
    read(j, "instances", e.instances);
    read(j, "dwell_s", e.dwell_s);
    read(j, "repetitions", e.repetitions);
    if (auto it = j.find("arms"); it != j.end()) {
        const auto arms = it->get<std::string>();
        if (arms != "both" && arms != "gated" && arms != "ungated") {
            throw ConfigError(fmt::format("sadr.arms must be both, gated or ungated (got '{}')", arms));
        }
        e.run_gated = arms != "ungated";
        e.run_ungated = arms != "gated";
    }
    read(j, "transport", s.transport);
    if (auto it = j.find("eval_timeout_ms"); it != j.end()) e.eval_timeout = std::chrono::milliseconds{it->get<int>()};
}

void read_pilot(const json& j, PilotSettings& p) {
    only_keys(j, "pilot",
              {"scenarios", "n_train", "n_test", "learning_rate", "iterations", "init_sigma", "debounce",
               "max_detect_frames", "clean_frames", "timeout_s"});
    read(j, "scenarios", p.scenarios);
    read(j, "n_train", p.factory.n_train);
    read(j, "n_test", p.factory.n_test);
    read(j, "learning_rate", p.factory.hyper.learning_rate);
    read(j, "iterations", p.factory.hyper.iterations);
    read(j, "init_sigma", p.factory.hyper.init_sigma);
    read(j, "debounce", p.debounce);
    read(j, "max_detect_frames", p.max_detect_frames);
    read(j, "clean_frames", p.clean_frames);
    if (auto it = j.find("timeout_s"); it != j.end()) {
        p.timeout = std::chrono::milliseconds{static_cast<long>(it->get<double>() * 1000.0)};
    }
}

}  // namespace

void Settings::validate() const {
    try {
        if (bench.sizes.empty() || bench.samples == 0) throw ConfigError("bench needs sizes and samples");
        mirror.scenario.validate();
        if (!(mirror.duration_s > 0.0) || !(mirror.speedup > 0.0)) {
            throw ConfigError("mirror duration and speedup must be positive");
        }
        if (!mirror.schedule.empty()) netsim::RateSchedule{mirror.schedule};
        const auto& e = sadr.escalation;
        e.scenario.validate();
        e.sadr.validate(e.scenario.capacity_mbps);
        if (e.sadr.safe_setup.size() != e.scenario.n_ues) throw ConfigError("sadr.safe_setup length must equal n_ues");
        if (e.instances.empty() || e.repetitions == 0) throw ConfigError("sadr needs instances and repetitions");
        for (const auto& inst : e.instances) {
            if (inst.size() != e.scenario.n_ues) throw ConfigError("every sadr instance needs one action per UE");
            for (auto a : inst) sadr::map_action_to_rate(a);
        }
        if (!(e.dwell_s * 1000.0 >= e.scenario.tick_ms)) throw ConfigError("sadr.dwell_s shorter than one tick");
        if (sadr.transport != "local" && sadr.transport != "link") {
            throw ConfigError(fmt::format("sadr.transport must be local or link (got '{}')", sadr.transport));
        }
        for (const auto& name : pilot.scenarios) pilot::scenario_pilots(name);
        if (pilot.debounce == 0) throw ConfigError("pilot.debounce must be >= 1");
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        throw ConfigError(e.what());
    }
}

Settings parse_settings(std::string_view json_text) {
    Settings s;
    try {
        const json j = json::parse(json_text);
        only_keys(j, "scenario", {"seed", "broker", "bench", "mirror", "sadr", "pilot"});
        read(j, "seed", s.seed);
        if (auto it = j.find("broker"); it != j.end() && !it->is_null()) {
            s.broker = net::Endpoint::parse(it->get<std::string>());
        }
        if (auto it = j.find("bench"); it != j.end()) read_bench(*it, s.bench);
        if (auto it = j.find("mirror"); it != j.end()) read_mirror(*it, s.mirror);
        if (auto it = j.find("sadr"); it != j.end()) read_sadr(*it, s.sadr);
        if (auto it = j.find("pilot"); it != j.end()) read_pilot(*it, s.pilot);
    } catch (const json::exception& e) {
        throw ConfigError(fmt::format("scenario file: {}", e.what()));
    } catch (const std::invalid_argument& e) {
        throw ConfigError(fmt::format("scenario file: {}", e.what()));
    } catch (const net::NetError& e) {
        throw ConfigError(fmt::format("scenario file: {}", e.what()));
    }
    s.validate();
    return s;
}

Settings load_settings(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError(fmt::format("cannot read scenario file '{}'", path.string()));
    std::stringstream buf;
    buf << f.rdbuf();
    return parse_settings(buf.str());
}

}  // namespace twinet::app
