#include "twinet/broker/subscription_table.hpp"

#include <algorithm>

namespace twinet::broker {

void SubscriptionTable::subscribe(const std::string& client_id, mqtt::TopicFilter filter, mqtt::QoS max_qos) {
    auto& entries = by_client_[client_id];
    auto it = std::find_if(entries.begin(), entries.end(), [&](const Entry& e) { return e.filter == filter; });
    if (it != entries.end()) {
        it->max_qos = max_qos;
        return;
    }
    entries.push_back(Entry{std::move(filter), max_qos});
}

void SubscriptionTable::remove_client(const std::string& client_id) { by_client_.erase(client_id); }

std::vector<Delivery> SubscriptionTable::match(std::string_view topic) const {
    std::vector<Delivery> out;
    for (const auto& [client, entries] : by_client_) {
        bool matched = false;
        auto best = mqtt::QoS::AtMostOnce;
        for (const auto& e : entries) {
            if (mqtt::topic_matches(e.filter, topic)) {
                matched = true;
                best = std::max(best, e.max_qos);
            }
        }
        if (matched) out.push_back(Delivery{client, best});
    }
    return out;
}

std::size_t SubscriptionTable::filter_count() const noexcept {
    std::size_t n = 0;
    for (const auto& [_, entries] : by_client_) n += entries.size();
    return n;
}

std::size_t SubscriptionTable::filter_count(const std::string& client_id) const {
    auto it = by_client_.find(client_id);
    return it == by_client_.end() ? 0 : it->second.size();
}

}  // namespace twinet::broker
