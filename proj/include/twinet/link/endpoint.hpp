#pragma once

#include <chrono>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "twinet/link/envelope.hpp"
#include "twinet/link/mqtt_client.hpp"

namespace twinet::link {

struct LinkOptions {
    net::Endpoint broker;
    std::string client_id;
    mqtt::QoS default_qos = mqtt::QoS::AtMostOnce;
    std::map<std::string, mqtt::QoS, std::less<>> topic_qos;  // per-topic publish override
    int max_retries = 5;
    std::chrono::milliseconds backoff_initial{50};
    std::chrono::milliseconds connect_timeout{1000};
    std::chrono::milliseconds ack_timeout{2000};
};

struct ReceivedEnvelope {
    MessageEnvelope envelope;
    std::int64_t received_at_us = 0;
};

struct LinkStats {
    std::uint64_t published = 0;
    std::uint64_t received = 0;
    std::uint64_t decode_errors = 0;
    std::uint64_t seq_gaps = 0;        // missing seq numbers observed per topic
    std::uint64_t seq_duplicates = 0;  // seq <= last seen on that topic
    std::uint64_t reconnects = 0;
};

/// One side of the real-world <-> twin link: stamps and sequences outgoing
/// envelopes, decodes incoming ones in arrival order, and reconnects with
/// exponential backoff when the broker goes away.
class LinkEndpoint {
public:
    explicit LinkEndpoint(LinkOptions options);

    /// Throws LinkError once the retry budget is exhausted.
    void connect();
    void close();
    bool connected() const;

    void subscribe(const std::string& filter, mqtt::QoS max_qos = mqtt::QoS::AtMostOnce);

    /// Assigns the next seq for `topic`, stamps sent_at, publishes. Returns what was sent.
    MessageEnvelope publish(const std::string& topic, EnvelopeKind kind, std::vector<std::uint8_t> payload);

    /// Next envelope in arrival order, waiting up to `wait`. Undecodable
    /// messages are counted and skipped.
    std::optional<ReceivedEnvelope> poll(std::chrono::milliseconds wait = std::chrono::milliseconds{0});

    /// Polls until an envelope on `topic` arrives; others are discarded.
    std::optional<ReceivedEnvelope> wait_for(std::string_view topic, std::chrono::milliseconds timeout);

    LinkStats stats() const;
    const LinkOptions& options() const noexcept { return options_; }

private:
    mqtt::QoS qos_for(std::string_view topic) const;
    /// Replaces `failed` (or establishes the first client) unless another
    /// thread already did. Returns the live client.
    std::shared_ptr<MqttClient> reconnect_with_backoff(const std::shared_ptr<MqttClient>& failed);
    std::shared_ptr<MqttClient> live_client();
    void track_sequence(const MessageEnvelope& e);

    LinkOptions options_;
    mutable std::mutex client_mutex_;
    std::shared_ptr<MqttClient> client_;
    std::vector<mqtt::SubscriptionRequest> subscriptions_;

    std::mutex publish_mutex_;
    std::map<std::string, std::uint64_t, std::less<>> next_seq_;

    mutable std::mutex stats_mutex_;
    LinkStats stats_;
    std::map<std::string, std::uint64_t, std::less<>> last_seq_;
};

}  // namespace twinet::link
