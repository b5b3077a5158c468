#pragma once

#include <atomic>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <set>
#include <shared_mutex>
#include <string>
#include <vector>

#include "twinet/broker/subscription_table.hpp"
#include "twinet/mqtt/packet.hpp"

namespace twinet::broker {

/// Transport side of one client connection.
class SessionSink {
public:
    virtual ~SessionSink() = default;
    /// Writes one encoded frame; false if the peer is gone.
    virtual bool send(const mqtt::Bytes& frame) = 0;
    /// Tears the connection down; the transport then reports on_closed().
    virtual void close() = 0;
};

struct BrokerStats {
    std::uint64_t connections_accepted = 0;
    std::uint64_t sessions_evicted = 0;
    std::uint64_t protocol_errors = 0;
    std::uint64_t publishes_received = 0;
    std::uint64_t publishes_routed = 0;  // publishes with at least one subscriber
    std::uint64_t deliveries = 0;
    std::uint64_t bytes_in = 0;
    std::uint64_t bytes_out = 0;
    std::uint64_t active_sessions = 0;
};

/// Per-connection state. Created by BrokerCore::open().
class Session : public std::enable_shared_from_this<Session> {
public:
    explicit Session(std::shared_ptr<SessionSink> sink) : sink_(std::move(sink)) {}

    const std::string& client_id() const noexcept { return client_id_; }
    bool connected() const noexcept { return connected_; }

private:
    friend class BrokerCore;

    /// Serialized write of one frame; tracks the QoS-1 in-flight id set.
    bool write(const mqtt::Bytes& frame);
    std::uint16_t allocate_packet_id();

    std::shared_ptr<SessionSink> sink_;
    std::string client_id_;
    bool connected_ = false;
    bool closed_ = false;

    std::mutex write_mutex_;
    std::mutex inflight_mutex_;  // ordered after write_mutex_
    std::uint16_t next_outbound_packet_id_ = 1;
    std::set<std::uint16_t> inflight_;
};

/// Transport-agnostic MQTT broker: session protocol plus publish routing.
///
/// The routing table and the session registry share one reader/writer lock:
/// routing holds it shared, subscription changes and (dis)connects hold it
/// exclusively, so a publish is routed against a single consistent view.
class BrokerCore {
public:
    std::shared_ptr<Session> open(std::shared_ptr<SessionSink> sink);

    /// Handles one decoded packet. Returns false when the connection must be
    /// closed (protocol violation or DISCONNECT).
    bool on_packet(Session& session, const mqtt::ControlPacket& packet);

    /// Must be called once per opened session after its transport ends.
    void on_closed(Session& session);

    void add_bytes_in(std::uint64_t n) noexcept { bytes_in_ += n; }
    void count_protocol_error() noexcept { ++protocol_errors_; }
    BrokerStats stats() const;

    std::size_t session_count() const;
    std::size_t subscription_count(const std::string& client_id) const;

private:
    bool handle_connect(Session& s, const mqtt::Connect& c);
    void handle_subscribe(Session& s, const mqtt::Subscribe& sub);
    void route_publish(Session& from, const mqtt::Publish& pub);
    bool send(Session& s, const mqtt::ControlPacket& p);
    void drop_session_locked(Session& s);

    mutable std::shared_mutex table_mutex_;
    SubscriptionTable table_;
    std::map<std::string, std::shared_ptr<Session>, std::less<>> sessions_;
    std::uint64_t anonymous_counter_ = 0;

    std::atomic<std::uint64_t> connections_accepted_{0};
    std::atomic<std::uint64_t> sessions_evicted_{0};
    std::atomic<std::uint64_t> protocol_errors_{0};
    std::atomic<std::uint64_t> publishes_received_{0};
    std::atomic<std::uint64_t> publishes_routed_{0};
    std::atomic<std::uint64_t> deliveries_{0};
    std::atomic<std::uint64_t> bytes_in_{0};
    std::atomic<std::uint64_t> bytes_out_{0};
};

}  // namespace twinet::broker
