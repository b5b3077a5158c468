#include "twinet/link/endpoint.hpp"

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include <thread>

#include "twinet/link/clock.hpp"

namespace twinet::link {

LinkEndpoint::LinkEndpoint(LinkOptions options) : options_(std::move(options)) {}

void LinkEndpoint::connect() { reconnect_with_backoff(nullptr); }

void LinkEndpoint::close() {
    std::shared_ptr<MqttClient> c;
    {
        std::lock_guard lock(client_mutex_);
        c = std::move(client_);
    }
    if (c) c->disconnect();
}

bool LinkEndpoint::connected() const {
    std::lock_guard lock(client_mutex_);
    return client_ && client_->connected();
}

std::shared_ptr<MqttClient> LinkEndpoint::live_client() {
    std::shared_ptr<MqttClient> c;
    {
        std::lock_guard lock(client_mutex_);
        c = client_;
    }
    if (c && c->connected()) return c;
    return reconnect_with_backoff(c);
}

std::shared_ptr<MqttClient> LinkEndpoint::reconnect_with_backoff(const std::shared_ptr<MqttClient>& failed) {
    std::lock_guard lock(client_mutex_);
    if (client_ && client_ != failed && client_->connected()) return client_;
    const bool first = client_ == nullptr && failed == nullptr;

    auto delay = options_.backoff_initial;
    std::string last_error;
    for (int attempt = 0; attempt <= options_.max_retries; ++attempt) {
        if (attempt > 0) {
            std::this_thread::sleep_for(delay);
            delay *= 2;
        }
        try {
            auto c = std::make_shared<MqttClient>(
                ClientOptions{options_.broker, options_.client_id, options_.connect_timeout, options_.ack_timeout});
            c->connect();
            if (!subscriptions_.empty()) c->subscribe(subscriptions_);
            client_ = std::move(c);
            if (!first) {
                std::lock_guard slock(stats_mutex_);
                ++stats_.reconnects;
            }
            return client_;
        } catch (const std::exception& e) {
            last_error = e.what();
            spdlog::debug("link '{}': connect attempt {} failed: {}", options_.client_id, attempt + 1, last_error);
        }
    }
    client_.reset();
    throw LinkError(fmt::format("link '{}' could not reach broker {} after {} retries: {}", options_.client_id,
                                options_.broker.str(), options_.max_retries, last_error));
}

void LinkEndpoint::subscribe(const std::string& filter, mqtt::QoS max_qos) {
    auto c = live_client();
    {
        std::lock_guard lock(client_mutex_);
        subscriptions_.push_back({filter, max_qos});
    }
    const auto granted = c->subscribe({{filter, max_qos}});
    if (granted.size() != 1 || granted[0] == mqtt::kSubscriptionFailure) {
        std::lock_guard lock(client_mutex_);
        subscriptions_.pop_back();
        throw LinkError(fmt::format("broker rejected subscription '{}'", filter));
    }
}

mqtt::QoS LinkEndpoint::qos_for(std::string_view topic) const {
    auto it = options_.topic_qos.find(topic);
    return it == options_.topic_qos.end() ? options_.default_qos : it->second;
}

MessageEnvelope LinkEndpoint::publish(const std::string& topic, EnvelopeKind kind, std::vector<std::uint8_t> payload) {
    std::lock_guard lock(publish_mutex_);
    MessageEnvelope e{topic, next_seq_[topic], 0, kind, std::move(payload)};
    const auto qos = qos_for(topic);
    auto c = live_client();
    try {
        e.sent_at = now_us();
        const std::string json = encode_envelope(e);
        c->publish(topic, mqtt::Bytes(json.begin(), json.end()), qos);
    } catch (const LinkError& err) {
        // One fresh connection, then give up; reconnect_with_backoff() owns the retry budget.
        spdlog::debug("link '{}': publish failed ({}), reconnecting", options_.client_id, err.what());
        c = reconnect_with_backoff(c);
        e.sent_at = now_us();
        const std::string json = encode_envelope(e);
        c->publish(topic, mqtt::Bytes(json.begin(), json.end()), qos);
    }
    ++next_seq_[topic];
    std::lock_guard slock(stats_mutex_);
    ++stats_.published;
    return e;
}

void LinkEndpoint::track_sequence(const MessageEnvelope& e) {
    // caller holds stats_mutex_
    auto [it, fresh] = last_seq_.try_emplace(e.topic, e.seq);
    if (fresh) return;
    if (e.seq <= it->second) {
        ++stats_.seq_duplicates;
        return;
    }
    stats_.seq_gaps += e.seq - it->second - 1;
    it->second = e.seq;
}

std::optional<ReceivedEnvelope> LinkEndpoint::poll(std::chrono::milliseconds wait) {
    std::shared_ptr<MqttClient> c;
    {
        std::lock_guard lock(client_mutex_);
        c = client_;
    }
    if (!c || (!c->connected() && c->pending() == 0)) c = reconnect_with_backoff(c);
    while (auto msg = c->poll(wait)) {
        try {
            ReceivedEnvelope r{decode_envelope(std::string_view(reinterpret_cast<const char*>(msg->payload.data()),
                                                                msg->payload.size())),
                               msg->received_at_us};
            std::lock_guard lock(stats_mutex_);
            ++stats_.received;
            track_sequence(r.envelope);
            return r;
        } catch (const EnvelopeError& err) {
            spdlog::warn("link '{}': dropping undecodable message on '{}': {}", options_.client_id, msg->topic,
                         err.what());
            std::lock_guard lock(stats_mutex_);
            ++stats_.decode_errors;
        }
    }
    return std::nullopt;
}

std::optional<ReceivedEnvelope> LinkEndpoint::wait_for(std::string_view topic, std::chrono::milliseconds timeout) {
    const auto deadline = std::chrono::steady_clock::now() + timeout;
    while (true) {
        const auto left =
            std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
        if (left.count() <= 0) return std::nullopt;
        auto r = poll(left);
        if (r && r->envelope.topic == topic) return r;
    }
}

LinkStats LinkEndpoint::stats() const {
    std::lock_guard lock(stats_mutex_);
    return stats_;
}

}  // namespace twinet::link
