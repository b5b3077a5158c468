#include "twinet/netsim/mirror.hpp"

#include <json.hpp>
#include <spdlog/spdlog.h>

namespace twinet::netsim {

using json = nlohmann::ordered_json;

std::vector<std::uint8_t> encode_traffic_update(const TrafficUpdate& update) {
    json j;
    j["tick"] = update.tick;
    j["rates_mbps"] = update.rates_mbps;
    const std::string s = j.dump();
    return {s.begin(), s.end()};
}

TrafficUpdate decode_traffic_update(std::span<const std::uint8_t> payload) {
    try {
        const auto j = json::parse(payload.begin(), payload.end());
        TrafficUpdate u;
        u.tick = j.at("tick").get<std::uint64_t>();
        u.rates_mbps = j.at("rates_mbps").get<std::vector<double>>();
        return u;
    } catch (const json::exception& e) {
        throw link::EnvelopeError(std::string("bad traffic update: ") + e.what());
    }
}

link::MessageEnvelope publish_observation(const NetworkState& state, link::LinkEndpoint& endpoint) {
    TrafficUpdate u{state.tick_index, {}};
    u.rates_mbps.reserve(state.ues.size());
    for (const auto& ue : state.ues) u.rates_mbps.push_back(ue.r_act_mbps);
    return endpoint.publish(std::string(link::topics::kRealTraffic), link::EnvelopeKind::TrafficUpdate,
                            encode_traffic_update(u));
}

MirrorOutcome TwinMirror::apply_mirror_update(const link::MessageEnvelope& envelope, std::int64_t applied_at_us) {
    if (envelope.kind != link::EnvelopeKind::TrafficUpdate) {
        ++rejected_;
        return MirrorOutcome::Rejected;
    }
    TrafficUpdate u;
    try {
        u = decode_traffic_update(envelope.payload);
        if (last_tick_ && u.tick <= *last_tick_) {
            ++stale_;
            return MirrorOutcome::Stale;
        }
        twin_.apply_allocation(u.rates_mbps);
    } catch (const std::exception& e) {
        spdlog::warn("mirror: rejecting update seq {}: {}", envelope.seq, e.what());
        ++rejected_;
        return MirrorOutcome::Rejected;
    }
    last_tick_ = u.tick;
    last_delay_ms_ = static_cast<double>(applied_at_us - envelope.sent_at) / 1000.0;
    ++applied_;
    return MirrorOutcome::Applied;
}

}  // namespace twinet::netsim
