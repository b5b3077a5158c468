#pragma once

#include <chrono>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "twinet/net/socket.hpp"
#include "twinet/netsim/schedule.hpp"
#include "twinet/netsim/simulator.hpp"
#include "twinet/pilot/redeploy.hpp"
#include "twinet/sadr/escalation.hpp"

namespace twinet::app {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct BenchSettings {
    std::vector<std::size_t> sizes{1, 100, 1000, 10000, 100000, 1000000};
    std::size_t samples = 100;
    std::size_t warmup = 5;
};

struct MirrorSettings {
    netsim::ScenarioConfig scenario{1, 9.0, 100.0, 0.02, 1};
    double duration_s = 60.0;
    std::size_t changes = 6;
    double speedup = 1.0;                      // wall-clock compression of the tick pacing
    std::vector<netsim::RateChange> schedule;  // packets/s; empty means generated from duration/changes
};

struct SadrSettings {
    sadr::EscalationOptions escalation;
    std::string transport = "local";  // or "link"
};

struct PilotSettings {
    std::vector<std::string> scenarios = pilot::scenario_names();
    pilot::FactoryOptions factory;
    std::size_t debounce = 3;
    std::size_t max_detect_frames = 50;
    std::size_t clean_frames = 200;
    std::chrono::milliseconds timeout{std::chrono::minutes{2}};
};

/// Everything a run needs. Loaded from a JSON scenario file; every key is
/// optional and falls back to the defaults above.
struct Settings {
    std::uint64_t seed = 1;
    std::optional<net::Endpoint> broker;  // external broker; in-process when absent
    BenchSettings bench;
    MirrorSettings mirror;
    SadrSettings sadr;
    PilotSettings pilot;

    /// Throws ConfigError.
    void validate() const;
};

/// Throws ConfigError on malformed JSON, unknown keys or bad values.
Settings parse_settings(std::string_view json_text);
Settings load_settings(const std::filesystem::path& path);

}  // namespace twinet::app
