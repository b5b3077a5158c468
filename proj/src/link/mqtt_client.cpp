#include "twinet/link/mqtt_client.hpp"

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "twinet/link/clock.hpp"
#include "twinet/mqtt/codec.hpp"

namespace twinet::link {

MqttClient::MqttClient(ClientOptions options) : options_(std::move(options)) {}

MqttClient::~MqttClient() { disconnect(); }

void MqttClient::connect() {
    teardown();
    socket_ = net::connect_tcp(options_.broker, options_.connect_timeout);
    {
        std::lock_guard lock(mutex_);
        connack_ = false;
        connected_ = false;
        acks_.clear();
    }
    reader_ = std::thread([this] { reader_loop(); });
    send_packet(mqtt::Connect{options_.client_id});

    std::unique_lock lock(mutex_);
    const bool got = cv_.wait_for(lock, options_.connect_timeout, [this] { return connack_; });
    if (!got || !connected_) {
        lock.unlock();
        teardown();
        throw LinkError(fmt::format("no CONNACK from {} for '{}'", options_.broker.str(), options_.client_id));
    }
}

void MqttClient::disconnect() {
    if (socket_.valid()) {
        try {
            send_packet(mqtt::Disconnect{});
        } catch (const std::exception&) {
        }
    }
    teardown();
}

void MqttClient::teardown() {
    socket_.shutdown();
    if (reader_.joinable()) reader_.join();
    socket_.close();
    std::lock_guard lock(mutex_);
    connected_ = false;
}

bool MqttClient::connected() const {
    std::lock_guard lock(mutex_);
    return connected_;
}

void MqttClient::send_packet(const mqtt::ControlPacket& packet) {
    const auto frame = mqtt::encode_packet(packet);
    std::lock_guard lock(write_mutex_);
    if (!socket_.valid() || !socket_.send_all(frame)) {
        throw LinkError(fmt::format("send of {} to {} failed", mqtt::to_string(mqtt::packet_type(packet)),
                                    options_.broker.str()));
    }
}

std::uint16_t MqttClient::next_packet_id() {
    // caller holds mutex_
    if (next_id_ == 0) next_id_ = 1;
    return next_id_++;
}

void MqttClient::wait_ack(std::unique_lock<std::mutex>& lock, std::uint16_t id, const char* what) {
    const bool ok = cv_.wait_for(lock, options_.ack_timeout, [&] { return acks_.count(id) != 0 || !connected_; });
    if (acks_.count(id) == 0) {
        throw LinkError(fmt::format("{} {} for packet {} on '{}'", ok ? "connection lost awaiting" : "timed out awaiting",
                                    what, id, options_.client_id));
    }
}

std::vector<std::uint8_t> MqttClient::subscribe(const std::vector<mqtt::SubscriptionRequest>& filters) {
    std::uint16_t id;
    {
        std::lock_guard lock(mutex_);
        if (!connected_) throw LinkError("subscribe while not connected");
        id = next_packet_id();
    }
    send_packet(mqtt::Subscribe{id, filters});
    std::unique_lock lock(mutex_);
    wait_ack(lock, id, "SUBACK");
    auto granted = std::move(acks_[id]);
    acks_.erase(id);
    return granted;
}

void MqttClient::publish(const std::string& topic, const mqtt::Bytes& payload, mqtt::QoS qos) {
    mqtt::Publish pub{topic, payload, qos, std::nullopt};
    {
        std::lock_guard lock(mutex_);
        if (!connected_) throw LinkError(fmt::format("publish on '{}' while not connected", topic));
        if (qos == mqtt::QoS::AtLeastOnce) pub.packet_id = next_packet_id();
    }
    send_packet(pub);
    if (qos == mqtt::QoS::AtLeastOnce) {
        std::unique_lock lock(mutex_);
        wait_ack(lock, *pub.packet_id, "PUBACK");
        acks_.erase(*pub.packet_id);
    }
}

void MqttClient::ping() {
    {
        std::lock_guard lock(mutex_);
        pingresp_ = false;
    }
    send_packet(mqtt::PingReq{});
    std::unique_lock lock(mutex_);
    if (!cv_.wait_for(lock, options_.ack_timeout, [this] { return pingresp_ || !connected_; }) || !pingresp_) {
        throw LinkError("no PINGRESP");
    }
}

std::optional<ReceivedMessage> MqttClient::poll(std::chrono::milliseconds wait) {
    std::unique_lock lock(mutex_);
    if (inbox_.empty() && wait.count() > 0) {
        cv_.wait_for(lock, wait, [this] { return !inbox_.empty() || !connected_; });
    }
    if (inbox_.empty()) return std::nullopt;
    ReceivedMessage msg = std::move(inbox_.front());
    inbox_.pop_front();
    return msg;
}

std::size_t MqttClient::pending() const {
    std::lock_guard lock(mutex_);
    return inbox_.size();
}

void MqttClient::reader_loop() {
    net::FrameReader reader(socket_);
    try {
        while (auto packet = reader.next()) {
            if (auto* pub = std::get_if<mqtt::Publish>(&*packet)) {
                ReceivedMessage msg{std::move(pub->topic), std::move(pub->payload), pub->qos, now_us()};
                if (pub->qos == mqtt::QoS::AtLeastOnce) send_packet(mqtt::PubAck{*pub->packet_id});
                std::lock_guard lock(mutex_);
                inbox_.push_back(std::move(msg));
                cv_.notify_all();
            } else if (auto* ack = std::get_if<mqtt::PubAck>(&*packet)) {
                std::lock_guard lock(mutex_);
                acks_[ack->packet_id] = {};
                cv_.notify_all();
            } else if (auto* sack = std::get_if<mqtt::SubAck>(&*packet)) {
                std::lock_guard lock(mutex_);
                acks_[sack->packet_id] = sack->granted;
                cv_.notify_all();
            } else if (auto* cack = std::get_if<mqtt::ConnAck>(&*packet)) {
                std::lock_guard lock(mutex_);
                connack_ = true;
                connected_ = cack->return_code == 0;
                cv_.notify_all();
            } else if (std::holds_alternative<mqtt::PingResp>(*packet)) {
                std::lock_guard lock(mutex_);
                pingresp_ = true;
                cv_.notify_all();
            } else {
                spdlog::warn("client '{}': unexpected {} from broker", options_.client_id,
                             mqtt::to_string(mqtt::packet_type(*packet)));
            }
        }
    } catch (const std::exception& e) {
        spdlog::debug("client '{}': reader stopped: {}", options_.client_id, e.what());
    }
    std::lock_guard lock(mutex_);
    connected_ = false;
    cv_.notify_all();
}

}  // namespace twinet::link
