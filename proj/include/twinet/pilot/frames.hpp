#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace twinet::pilot {

struct PilotConfig {
    std::size_t n_subcarriers = 64;
    std::vector<std::size_t> pilot_indices;
    std::string label;

    std::size_t pilots() const noexcept { return pilot_indices.size(); }
    std::size_t classes() const noexcept { return pilot_indices.size() + 1; }

    /// Throws std::invalid_argument unless indices are distinct, sorted and < K.
    void validate() const;

    bool operator==(const PilotConfig&) const = default;
};

/// Evenly spaced pilots: idx_j = floor((j + 0.5) * K / P).
std::vector<std::size_t> spread_pilots(std::size_t k, std::size_t p);

/// Named scenarios: "10mhz" (64, 4), "20mhz" (128, 4), "40mhz" (128, 6).
/// Throws std::invalid_argument for anything else.
PilotConfig scenario_pilots(std::string_view name);
std::vector<std::string> scenario_names();

/// Per-subcarrier power template. Subcarriers in the outer K/16 on each
/// edge are guard bands at the noise floor; the rest carry data.
struct FrameModel {
    double noise_power = 1.0;
    double data_power = 4.0;
    double pilot_power = 6.0;
    double jam_power = 10.0;
    double log_sigma = 0.1;

    std::vector<double> template_powers(const PilotConfig& pilots) const;
};

struct SpectrumFrame {
    std::vector<double> powers;
    std::size_t jam_class = 0;  // 0 clean, p = pilot_indices[p-1] jammed
};

/// powers[k] = base_k * exp(g_k), g_k ~ N(0, log_sigma); jam_power added on the jammed pilot.
/// Throws std::invalid_argument if jam_class > P.
SpectrumFrame generate_frame(const PilotConfig& pilots, std::size_t jam_class, std::mt19937_64& rng,
                             const FrameModel& model = {});

}  // namespace twinet::pilot
