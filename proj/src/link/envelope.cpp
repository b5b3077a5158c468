#include "twinet/link/envelope.hpp"

#include <fmt/format.h>

#include <array>
#include <json.hpp>

#include "twinet/link/base64.hpp"

namespace twinet::link {

namespace {

constexpr std::array<std::pair<EnvelopeKind, std::string_view>, 7> kKindNames{{
    {EnvelopeKind::TrafficUpdate, "TrafficUpdate"},
    {EnvelopeKind::EvalRequest, "EvalRequest"},
    {EnvelopeKind::EvalResult, "EvalResult"},
    {EnvelopeKind::ModelRequest, "ModelRequest"},
    {EnvelopeKind::ModelArtifactMsg, "ModelArtifactMsg"},
    {EnvelopeKind::BenchPing, "BenchPing"},
    {EnvelopeKind::BenchPong, "BenchPong"},
}};

const nlohmann::json& require(const nlohmann::json& obj, const char* key) {
    auto it = obj.find(key);
    if (it == obj.end()) throw EnvelopeError(fmt::format("envelope is missing key '{}'", key));
    return *it;
}

}  // namespace

const char* to_string(EnvelopeKind kind) noexcept {
    for (const auto& [k, name] : kKindNames) {
        if (k == kind) return name.data();
    }
    return "?";
}

EnvelopeKind kind_from_string(std::string_view name) {
    for (const auto& [k, n] : kKindNames) {
        if (n == name) return k;
    }
    throw EnvelopeError(fmt::format("unknown envelope kind '{}'", name));
}

std::string encode_envelope(const MessageEnvelope& e) {
    nlohmann::ordered_json j;
    j["topic"] = e.topic;
    j["seq"] = e.seq;
    j["sent_at"] = e.sent_at;
    j["kind"] = to_string(e.kind);
    j["payload_b64"] = base64_encode(e.payload);
    return j.dump();
}

MessageEnvelope decode_envelope(std::string_view json) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(json);
    } catch (const nlohmann::json::parse_error& err) {
        throw EnvelopeError(fmt::format("envelope is not valid JSON: {}", err.what()));
    }
    if (!j.is_object()) throw EnvelopeError("envelope must be a JSON object");

    MessageEnvelope e;
    try {
        e.topic = require(j, "topic").get<std::string>();
        e.seq = require(j, "seq").get<std::uint64_t>();
        e.sent_at = require(j, "sent_at").get<std::int64_t>();
        e.kind = kind_from_string(require(j, "kind").get<std::string>());
        const auto& b64 = require(j, "payload_b64").get_ref<const std::string&>();
        auto payload = base64_decode(b64);
        if (!payload) throw EnvelopeError("payload_b64 is not valid base64");
        e.payload = std::move(*payload);
    } catch (const nlohmann::json::type_error& err) {
        throw EnvelopeError(fmt::format("envelope field has wrong type: {}", err.what()));
    }
    return e;
}

std::vector<std::uint8_t> to_bytes(std::string_view text) { return {text.begin(), text.end()}; }

namespace topics {
std::string bench_ping(std::string_view direction) { return fmt::format("bench/ping/{}", direction); }
std::string bench_pong(std::string_view direction) { return fmt::format("bench/pong/{}", direction); }
}  // namespace topics

}  // namespace twinet::link
