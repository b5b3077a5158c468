#include "twinet/broker/broker.hpp"

#include <spdlog/spdlog.h>

#include <type_traits>

#include "twinet/mqtt/codec.hpp"

namespace twinet::broker {

bool Session::write(const mqtt::Bytes& frame) {
    std::lock_guard lock(write_mutex_);
    if (closed_) return false;
    if (!sink_->send(frame)) {
        closed_ = true;
        return false;
    }
    return true;
}

std::uint16_t Session::allocate_packet_id() {
    std::lock_guard lock(inflight_mutex_);
    if (inflight_.size() >= 0xFFFF) inflight_.erase(inflight_.begin());
    while (next_outbound_packet_id_ == 0 || inflight_.count(next_outbound_packet_id_) != 0) {
        ++next_outbound_packet_id_;
    }
    const std::uint16_t id = next_outbound_packet_id_++;
    inflight_.insert(id);
    return id;
}

std::shared_ptr<Session> BrokerCore::open(std::shared_ptr<SessionSink> sink) {
    ++connections_accepted_;
    return std::make_shared<Session>(std::move(sink));
}

bool BrokerCore::send(Session& s, const mqtt::ControlPacket& p) {
    const auto frame = mqtt::encode_packet(p);
    if (!s.write(frame)) return false;
    bytes_out_ += frame.size();
    return true;
}

bool BrokerCore::on_packet(Session& s, const mqtt::ControlPacket& packet) {
    if (!s.connected_) {
        if (const auto* c = std::get_if<mqtt::Connect>(&packet)) return handle_connect(s, *c);
        ++protocol_errors_;
        spdlog::debug("broker: {} before CONNECT, closing", mqtt::to_string(mqtt::packet_type(packet)));
        return false;
    }
    return std::visit(
        [&](const auto& p) -> bool {
            using T = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<T, mqtt::Publish>) {
                route_publish(s, p);
                if (p.qos == mqtt::QoS::AtLeastOnce) return send(s, mqtt::PubAck{*p.packet_id});
                return true;
            } else if constexpr (std::is_same_v<T, mqtt::PubAck>) {
                std::lock_guard lock(s.inflight_mutex_);
                s.inflight_.erase(p.packet_id);
                return true;
            } else if constexpr (std::is_same_v<T, mqtt::Subscribe>) {
                handle_subscribe(s, p);
                return true;
            } else if constexpr (std::is_same_v<T, mqtt::PingReq>) {
                return send(s, mqtt::PingResp{});
            } else if constexpr (std::is_same_v<T, mqtt::Disconnect>) {
                return false;
            } else {
                // second CONNECT, or a server-to-client packet type
                ++protocol_errors_;
                return false;
            }
        },
        packet);
}

bool BrokerCore::handle_connect(Session& s, const mqtt::Connect& c) {
    std::shared_ptr<Session> evicted;
    {
        std::unique_lock lock(table_mutex_);
        s.client_id_ = c.client_id.empty() ? "auto-" + std::to_string(++anonymous_counter_) : c.client_id;
        if (auto it = sessions_.find(s.client_id_); it != sessions_.end()) {
            evicted = it->second;
            table_.remove_client(s.client_id_);
            sessions_.erase(it);
            ++sessions_evicted_;
        }
        sessions_.emplace(s.client_id_, s.shared_from_this());
        s.connected_ = true;
    }
    if (evicted) {
        std::lock_guard wl(evicted->write_mutex_);
        evicted->closed_ = true;
        evicted->sink_->close();
        spdlog::info("broker: session '{}' evicted by reconnect", s.client_id_);
    }
    return send(s, mqtt::ConnAck{0});
}

void BrokerCore::handle_subscribe(Session& s, const mqtt::Subscribe& sub) {
    mqtt::SubAck ack{sub.packet_id, {}};
    {
        std::unique_lock lock(table_mutex_);
        for (const auto& req : sub.filters) {
            try {
                table_.subscribe(s.client_id_, mqtt::TopicFilter::parse(req.filter), req.max_qos);
                ack.granted.push_back(static_cast<std::uint8_t>(req.max_qos));
            } catch (const mqtt::TopicError& e) {
                spdlog::debug("broker: rejected filter '{}': {}", req.filter, e.what());
                ack.granted.push_back(mqtt::kSubscriptionFailure);
            }
        }
    }
    send(s, ack);
}

void BrokerCore::route_publish([[maybe_unused]] Session& from, const mqtt::Publish& pub) {
    ++publishes_received_;
    std::shared_lock lock(table_mutex_);
    const auto targets = table_.match(pub.topic);
    if (!targets.empty()) ++publishes_routed_;
    for (const auto& target : targets) {
        auto it = sessions_.find(target.client_id);
        if (it == sessions_.end()) continue;
        Session& dst = *it->second;
        mqtt::Publish out{pub.topic, pub.payload, std::min(pub.qos, target.max_qos), std::nullopt};

        std::lock_guard wl(dst.write_mutex_);
        if (dst.closed_) continue;
        if (out.qos == mqtt::QoS::AtLeastOnce) out.packet_id = dst.allocate_packet_id();
        const auto frame = mqtt::encode_packet(out);
        if (!dst.sink_->send(frame)) {
            dst.closed_ = true;
            continue;
        }
        bytes_out_ += frame.size();
        ++deliveries_;
    }
}

void BrokerCore::drop_session_locked(Session& s) {
    auto it = sessions_.find(s.client_id_);
    if (it != sessions_.end() && it->second.get() == &s) {
        sessions_.erase(it);
        table_.remove_client(s.client_id_);
    }
}

void BrokerCore::on_closed(Session& s) {
    {
        std::unique_lock lock(table_mutex_);
        if (s.connected_) drop_session_locked(s);
        s.connected_ = false;
    }
    std::lock_guard wl(s.write_mutex_);
    s.closed_ = true;
}

BrokerStats BrokerCore::stats() const {
    BrokerStats st;
    st.connections_accepted = connections_accepted_;
    st.sessions_evicted = sessions_evicted_;
    st.protocol_errors = protocol_errors_;
    st.publishes_received = publishes_received_;
    st.publishes_routed = publishes_routed_;
    st.deliveries = deliveries_;
    st.bytes_in = bytes_in_;
    st.bytes_out = bytes_out_;
    st.active_sessions = session_count();
    return st;
}

std::size_t BrokerCore::session_count() const {
    std::shared_lock lock(table_mutex_);
    return sessions_.size();
}

std::size_t BrokerCore::subscription_count(const std::string& client_id) const {
    std::shared_lock lock(table_mutex_);
    return table_.filter_count(client_id);
}

}  // namespace twinet::broker
