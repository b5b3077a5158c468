#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace twinet::mqtt {

using Bytes = std::vector<std::uint8_t>;

enum class QoS : std::uint8_t { AtMostOnce = 0, AtLeastOnce = 1 };

/// Largest value representable by the 4-byte remaining-length varint.
inline constexpr std::uint32_t kMaxRemainingLength = 268'435'455;

/// SubAck return code for a rejected filter.
inline constexpr std::uint8_t kSubscriptionFailure = 0x80;

enum class PacketType : std::uint8_t {
    Connect = 1,
    ConnAck = 2,
    Publish = 3,
    PubAck = 4,
    Subscribe = 8,
    SubAck = 9,
    PingReq = 12,
    PingResp = 13,
    Disconnect = 14,
};

struct Connect {
    std::string client_id;
    bool operator==(const Connect&) const = default;
};

struct ConnAck {
    std::uint8_t return_code = 0;
    bool operator==(const ConnAck&) const = default;
};

struct Publish {
    std::string topic;
    Bytes payload;
    QoS qos = QoS::AtMostOnce;
    std::optional<std::uint16_t> packet_id;  // present iff qos == AtLeastOnce
    bool operator==(const Publish&) const = default;
};

struct PubAck {
    std::uint16_t packet_id = 0;
    bool operator==(const PubAck&) const = default;
};

struct SubscriptionRequest {
    std::string filter;
    QoS max_qos = QoS::AtMostOnce;
    bool operator==(const SubscriptionRequest&) const = default;
};

struct Subscribe {
    std::uint16_t packet_id = 0;
    std::vector<SubscriptionRequest> filters;
    bool operator==(const Subscribe&) const = default;
};

struct SubAck {
    std::uint16_t packet_id = 0;
    std::vector<std::uint8_t> granted;
    bool operator==(const SubAck&) const = default;
};

struct PingReq {
    bool operator==(const PingReq&) const = default;
};
struct PingResp {
    bool operator==(const PingResp&) const = default;
};
struct Disconnect {
    bool operator==(const Disconnect&) const = default;
};

using ControlPacket =
    std::variant<Connect, ConnAck, Publish, PubAck, Subscribe, SubAck, PingReq, PingResp, Disconnect>;

PacketType packet_type(const ControlPacket& packet);
const char* to_string(PacketType type);

}  // namespace twinet::mqtt
