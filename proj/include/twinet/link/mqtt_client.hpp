#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <map>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "twinet/mqtt/packet.hpp"
#include "twinet/net/socket.hpp"

namespace twinet::link {

class LinkError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct ClientOptions {
    net::Endpoint broker;
    std::string client_id;
    std::chrono::milliseconds connect_timeout{2000};
    std::chrono::milliseconds ack_timeout{2000};
};

struct ReceivedMessage {
    std::string topic;
    mqtt::Bytes payload;
    mqtt::QoS qos = mqtt::QoS::AtMostOnce;
    std::int64_t received_at_us = 0;  // stamped when the frame was decoded
};

/// Minimal blocking MQTT 3.1.1 client. A background reader thread acks
/// QoS-1 deliveries and queues inbound publishes in arrival order.
class MqttClient {
public:
    explicit MqttClient(ClientOptions options);
    ~MqttClient();
    MqttClient(const MqttClient&) = delete;
    MqttClient& operator=(const MqttClient&) = delete;

    /// Throws net::NetError or LinkError.
    void connect();
    /// Sends DISCONNECT (best effort) and tears the socket down.
    void disconnect();
    bool connected() const;

    /// Blocks for the SUBACK; returns the granted codes.
    std::vector<std::uint8_t> subscribe(const std::vector<mqtt::SubscriptionRequest>& filters);

    /// QoS 1 blocks until the broker's PUBACK. Throws LinkError on failure.
    void publish(const std::string& topic, const mqtt::Bytes& payload, mqtt::QoS qos);

    void ping();

    std::optional<ReceivedMessage> poll(std::chrono::milliseconds wait);
    std::size_t pending() const;

    const ClientOptions& options() const noexcept { return options_; }

private:
    void reader_loop();
    void send_packet(const mqtt::ControlPacket& packet);
    std::uint16_t next_packet_id();
    void wait_ack(std::unique_lock<std::mutex>& lock, std::uint16_t id, const char* what);
    void teardown();

    ClientOptions options_;
    net::Socket socket_;
    std::thread reader_;

    std::mutex write_mutex_;

    mutable std::mutex mutex_;
    std::condition_variable cv_;
    bool connected_ = false;
    bool connack_ = false;
    bool pingresp_ = false;
    std::uint16_t next_id_ = 1;
    std::map<std::uint16_t, std::vector<std::uint8_t>> acks_;  // PUBACK (empty) or SUBACK codes
    std::deque<ReceivedMessage> inbox_;
};

}  // namespace twinet::link
