#include "twinet/pilot/frames.hpp"

#include <fmt/format.h>

#include <cmath>
#include <stdexcept>

namespace twinet::pilot {

void PilotConfig::validate() const {
    if (n_subcarriers == 0) throw std::invalid_argument("pilot config: K must be positive");
    if (pilot_indices.empty()) throw std::invalid_argument("pilot config: no pilots");
    for (std::size_t i = 0; i < pilot_indices.size(); ++i) {
        if (pilot_indices[i] >= n_subcarriers) {
            throw std::invalid_argument(fmt::format("pilot index {} out of range [0, {})", pilot_indices[i], n_subcarriers));
        }
        if (i > 0 && pilot_indices[i] <= pilot_indices[i - 1]) {
            throw std::invalid_argument("pilot indices must be distinct and sorted");
        }
    }
}

std::vector<std::size_t> spread_pilots(std::size_t k, std::size_t p) {
    std::vector<std::size_t> idx;
    for (std::size_t j = 0; j < p; ++j) {
        idx.push_back(static_cast<std::size_t>(std::floor((static_cast<double>(j) + 0.5) * static_cast<double>(k) /
                                                          static_cast<double>(p))));
    }
    return idx;
}

PilotConfig scenario_pilots(std::string_view name) {
    auto make = [](std::size_t k, std::size_t p, std::string label) {
        return PilotConfig{k, spread_pilots(k, p), std::move(label)};
    };
    if (name == "10mhz") return make(64, 4, "10 MHz");
    if (name == "20mhz") return make(128, 4, "20 MHz");
    if (name == "40mhz") return make(128, 6, "40 MHz");
    throw std::invalid_argument(fmt::format("unknown scenario '{}' (expected 10mhz, 20mhz or 40mhz)", name));
}

std::vector<std::string> scenario_names() { return {"10mhz", "20mhz", "40mhz"}; }

std::vector<double> FrameModel::template_powers(const PilotConfig& pilots) const {
    const std::size_t k = pilots.n_subcarriers;
    const std::size_t guard = k / 16;
    std::vector<double> base(k, data_power);
    for (std::size_t i = 0; i < guard && i < k; ++i) {
        base[i] = noise_power;
        base[k - 1 - i] = noise_power;
    }
    for (auto p : pilots.pilot_indices) base[p] = pilot_power;
    return base;
}

SpectrumFrame generate_frame(const PilotConfig& pilots, std::size_t jam_class, std::mt19937_64& rng,
                             const FrameModel& model) {
    if (jam_class > pilots.pilots()) {
        throw std::invalid_argument(fmt::format("jam class {} exceeds pilot count {}", jam_class, pilots.pilots()));
    }
    SpectrumFrame f{model.template_powers(pilots), jam_class};
    if (model.log_sigma > 0.0) {
        std::normal_distribution<double> g(0.0, model.log_sigma);
        for (auto& p : f.powers) p *= std::exp(g(rng));
    }
    if (jam_class > 0) f.powers[pilots.pilot_indices[jam_class - 1]] += model.jam_power;
    return f;
}

}  // namespace twinet::pilot
