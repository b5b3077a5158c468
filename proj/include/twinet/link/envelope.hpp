#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace twinet::link {

enum class EnvelopeKind {
    TrafficUpdate,
    EvalRequest,
    EvalResult,
    ModelRequest,
    ModelArtifactMsg,
    BenchPing,
    BenchPong,
};

const char* to_string(EnvelopeKind kind) noexcept;
/// Throws EnvelopeError for an unknown name.
EnvelopeKind kind_from_string(std::string_view name);

/// Application message carried on the link. seq is per (sender, topic);
/// sent_at is microseconds since the Unix epoch, stamped at publish time.
struct MessageEnvelope {
    std::string topic;
    std::uint64_t seq = 0;
    std::int64_t sent_at = 0;
    EnvelopeKind kind = EnvelopeKind::TrafficUpdate;
    std::vector<std::uint8_t> payload;

    bool operator==(const MessageEnvelope&) const = default;

    std::string payload_text() const { return {payload.begin(), payload.end()}; }
};

class EnvelopeError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Canonical JSON: {"topic","seq","sent_at","kind","payload_b64"} in that order.
std::string encode_envelope(const MessageEnvelope& e);
MessageEnvelope decode_envelope(std::string_view json);

std::vector<std::uint8_t> to_bytes(std::string_view text);

// Canonical topic namespace.
namespace topics {
inline constexpr std::string_view kRealTraffic = "rw/traffic";
inline constexpr std::string_view kRealRequest = "rw/request";
inline constexpr std::string_view kTwinTraffic = "dt/traffic";
inline constexpr std::string_view kEvalResult = "dt/eval/result";
inline constexpr std::string_view kModelRequest = "dt/model/request";
inline constexpr std::string_view kModelArtifact = "dt/model/artifact";
inline constexpr std::string_view kModelReport = "dt/model/report";
std::string bench_ping(std::string_view direction);
std::string bench_pong(std::string_view direction);
}  // namespace topics

}  // namespace twinet::link
