#pragma once

#include <vector>

namespace twinet::netsim {

struct RateChange {
    double t_seconds = 0.0;
    double rate = 0.0;
    bool operator==(const RateChange&) const = default;
};

/// MGEN-style piecewise-constant rate schedule. Rates are in whatever unit
/// the caller uses (the mirror experiment uses packets/s).
class RateSchedule {
public:
    RateSchedule() = default;
    /// Throws std::invalid_argument unless times are strictly increasing and rates >= 0.
    explicit RateSchedule(std::vector<RateChange> change_points);

    /// Rate of the last change point with t_cp <= t (inclusive); 0 before the first.
    double rate_at(double t_seconds) const noexcept;

    const std::vector<RateChange>& change_points() const noexcept { return points_; }

private:
    std::vector<RateChange> points_;
};

inline double schedule_rate_at(const RateSchedule& schedule, double t_seconds) noexcept {
    return schedule.rate_at(t_seconds);
}

/// Initial rate at t=0 followed by `changes` evenly spaced rate changes
/// over `duration_s`, cycling through a fixed packets/s pattern.
RateSchedule make_mirror_schedule(double duration_s, std::size_t changes);

}  // namespace twinet::netsim
