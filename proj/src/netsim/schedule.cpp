#include "twinet/netsim/schedule.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>

namespace twinet::netsim {

RateSchedule::RateSchedule(std::vector<RateChange> change_points) : points_(std::move(change_points)) {
    for (std::size_t i = 0; i < points_.size(); ++i) {
        if (!std::isfinite(points_[i].t_seconds) || !(points_[i].rate >= 0.0)) {
            throw std::invalid_argument(fmt::format("invalid change point #{}", i));
        }
        if (i > 0 && !(points_[i].t_seconds > points_[i - 1].t_seconds)) {
            throw std::invalid_argument(fmt::format("change point times must strictly increase (#{})", i));
        }
    }
}

double RateSchedule::rate_at(double t_seconds) const noexcept {
    auto it = std::upper_bound(points_.begin(), points_.end(), t_seconds,
                               [](double t, const RateChange& cp) { return t < cp.t_seconds; });
    if (it == points_.begin()) return 0.0;
    return std::prev(it)->rate;
}

RateSchedule make_mirror_schedule(double duration_s, std::size_t changes) {
    if (!(duration_s > 0.0)) throw std::invalid_argument("duration must be positive");
    constexpr std::array<double, 7> kPattern{100.0, 200.0, 400.0, 300.0, 500.0, 250.0, 150.0};
    std::vector<RateChange> points;
    points.push_back({0.0, kPattern[0]});
    const double spacing = duration_s / static_cast<double>(changes + 1);
    for (std::size_t i = 1; i <= changes; ++i) {
        // Snap to a tenth of a second so change times land on 100 ms tick boundaries.
        const double t = std::round(spacing * static_cast<double>(i) * 10.0) / 10.0;
        points.push_back({t, kPattern[i % kPattern.size()]});
    }
    return RateSchedule(std::move(points));
}

}  // namespace twinet::netsim
