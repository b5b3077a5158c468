#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "twinet/mqtt/packet.hpp"
#include "twinet/mqtt/topic.hpp"

namespace twinet::broker {

struct Delivery {
    std::string client_id;
    mqtt::QoS max_qos;
    bool operator==(const Delivery&) const = default;
};

/// Client -> filters map. Not synchronized; the broker guards it.
class SubscriptionTable {
public:
    /// Adds or replaces (same filter text) a subscription.
    void subscribe(const std::string& client_id, mqtt::TopicFilter filter, mqtt::QoS max_qos);
    void remove_client(const std::string& client_id);

    /// One entry per client with at least one matching filter, carrying the
    /// highest max_qos among that client's matching filters. Sorted by client id.
    std::vector<Delivery> match(std::string_view topic) const;

    std::size_t filter_count() const noexcept;
    std::size_t filter_count(const std::string& client_id) const;

private:
    struct Entry {
        mqtt::TopicFilter filter;
        mqtt::QoS max_qos;
    };
    std::map<std::string, std::vector<Entry>, std::less<>> by_client_;
};

}  // namespace twinet::broker
