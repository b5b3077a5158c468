#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "twinet/link/endpoint.hpp"
#include "twinet/link/envelope.hpp"
#include "twinet/netsim/simulator.hpp"

namespace twinet::netsim {

/// Observed real-world allocation for one tick, as mirrored to the twin.
struct TrafficUpdate {
    std::uint64_t tick = 0;
    std::vector<double> rates_mbps;

    bool operator==(const TrafficUpdate&) const = default;
};

std::vector<std::uint8_t> encode_traffic_update(const TrafficUpdate& update);
/// Throws link::EnvelopeError on malformed JSON or missing fields.
TrafficUpdate decode_traffic_update(std::span<const std::uint8_t> payload);

/// Publishes the state's r_act vector on the real-traffic topic.
link::MessageEnvelope publish_observation(const NetworkState& state, link::LinkEndpoint& endpoint);

enum class MirrorOutcome { Applied, Stale, Rejected };

/// Twin-side consumer of TrafficUpdate messages. Updates carrying a tick at
/// or below the last applied one are counted as stale and ignored, which
/// makes re-delivered messages harmless.
class TwinMirror {
public:
    explicit TwinMirror(Simulator& twin) : twin_(twin) {}

    /// `applied_at_us` is the wall-clock time the update takes effect; the
    /// mirror delay is that minus the envelope's sent_at.
    MirrorOutcome apply_mirror_update(const link::MessageEnvelope& envelope, std::int64_t applied_at_us);

    std::optional<std::uint64_t> last_tick() const noexcept { return last_tick_; }
    double last_delay_ms() const noexcept { return last_delay_ms_; }
    std::uint64_t applied() const noexcept { return applied_; }
    std::uint64_t stale() const noexcept { return stale_; }
    std::uint64_t rejected() const noexcept { return rejected_; }

private:
    Simulator& twin_;
    std::optional<std::uint64_t> last_tick_;
    double last_delay_ms_ = 0.0;
    std::uint64_t applied_ = 0;
    std::uint64_t stale_ = 0;
    std::uint64_t rejected_ = 0;
};

}  // namespace twinet::netsim
