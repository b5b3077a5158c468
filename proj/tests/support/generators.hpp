#pragma once

// Random valid packets, envelopes, filters and topics for the property tests.

#include <random>
#include <string>
#include <vector>

#include "twinet/link/envelope.hpp"
#include "twinet/mqtt/packet.hpp"

namespace twinet::gen {

inline std::string random_level(std::mt19937_64& rng, bool allow_dollar = false) {
    static const std::string alphabet = "abcxyz019-_ .";
    std::uniform_int_distribution<int> len(0, 3);
    std::uniform_int_distribution<std::size_t> ch(0, alphabet.size() - 1);
    std::string s;
    const int n = len(rng);
    for (int i = 0; i < n; ++i) s.push_back(alphabet[ch(rng)]);
    if (allow_dollar && std::bernoulli_distribution(0.1)(rng)) s.insert(s.begin(), '$');
    return s;
}

/// Small alphabet so filters and topics collide often.
inline std::string random_topic(std::mt19937_64& rng) {
    static const char* levels[] = {"a", "b", "c", "", "$SYS", "ab"};
    std::uniform_int_distribution<int> depth(1, 4);
    std::uniform_int_distribution<int> pick(0, 5);
    std::string t;
    const int d = depth(rng);
    for (int i = 0; i < d; ++i) {
        if (i) t += '/';
        auto l = std::string(levels[pick(rng)]);
        if (i > 0 && l == "$SYS") l = "a";
        t += l;
    }
    return t.empty() ? std::string("a") : t;
}

inline std::string random_filter(std::mt19937_64& rng) {
    static const char* levels[] = {"a", "b", "c", "", "$SYS", "+", "ab"};
    std::uniform_int_distribution<int> depth(1, 4);
    std::uniform_int_distribution<int> pick(0, 6);
    std::string f;
    const int d = depth(rng);
    for (int i = 0; i < d; ++i) {
        if (i) f += '/';
        f += levels[pick(rng)];
    }
    if (f.empty()) f = "+";
    if (std::bernoulli_distribution(0.05)(rng)) return "#";
    if (std::bernoulli_distribution(0.3)(rng)) f += "/#";
    return f;
}

inline std::string random_utf8(std::mt19937_64& rng, std::size_t max_len) {
    static const std::vector<std::string> pieces = {"a", "Z", "/", "0", " ", "\xC3\xA9", "\xE2\x82\xAC", "\xF0\x9F\x98\x80"};
    std::uniform_int_distribution<std::size_t> len(0, max_len);
    std::uniform_int_distribution<std::size_t> pick(0, pieces.size() - 1);
    std::string s;
    const auto n = len(rng);
    for (std::size_t i = 0; i < n; ++i) s += pieces[pick(rng)];
    return s;
}

inline std::string random_topic_name(std::mt19937_64& rng) {
    auto t = random_utf8(rng, 8);
    return t.empty() ? std::string("t") : t;
}

inline mqtt::Bytes random_bytes(std::mt19937_64& rng, std::size_t max_len) {
    std::uniform_int_distribution<std::size_t> len(0, max_len);
    std::uniform_int_distribution<int> byte(0, 255);
    mqtt::Bytes b(len(rng));
    for (auto& x : b) x = static_cast<std::uint8_t>(byte(rng));
    return b;
}

inline mqtt::ControlPacket random_packet(std::mt19937_64& rng) {
    using namespace mqtt;
    std::uniform_int_distribution<int> kind(0, 8);
    std::uniform_int_distribution<std::uint32_t> u16(0, 0xFFFF);
    std::uniform_int_distribution<std::uint32_t> nz16(1, 0xFFFF);
    switch (kind(rng)) {
        case 0: return Connect{random_utf8(rng, 12)};
        case 1: return ConnAck{static_cast<std::uint8_t>(std::uniform_int_distribution<int>(0, 5)(rng))};
        case 2: {
            Publish p{random_topic_name(rng), random_bytes(rng, 64), QoS::AtMostOnce, std::nullopt};
            if (std::bernoulli_distribution(0.5)(rng)) {
                p.qos = QoS::AtLeastOnce;
                p.packet_id = static_cast<std::uint16_t>(nz16(rng));
            }
            return p;
        }
        case 3: return PubAck{static_cast<std::uint16_t>(u16(rng))};
        case 4: {
            Subscribe s{static_cast<std::uint16_t>(nz16(rng)), {}};
            const int n = std::uniform_int_distribution<int>(1, 4)(rng);
            for (int i = 0; i < n; ++i) {
                s.filters.push_back({random_filter(rng), std::bernoulli_distribution(0.5)(rng) ? QoS::AtLeastOnce
                                                                                              : QoS::AtMostOnce});
            }
            return s;
        }
        case 5: {
            SubAck a{static_cast<std::uint16_t>(u16(rng)), {}};
            const int n = std::uniform_int_distribution<int>(1, 4)(rng);
            static const std::uint8_t codes[] = {0, 1, kSubscriptionFailure};
            for (int i = 0; i < n; ++i) a.granted.push_back(codes[std::uniform_int_distribution<int>(0, 2)(rng)]);
            return a;
        }
        case 6: return PingReq{};
        case 7: return PingResp{};
        default: return Disconnect{};
    }
}

inline link::MessageEnvelope random_envelope(std::mt19937_64& rng) {
    static const link::EnvelopeKind kinds[] = {
        link::EnvelopeKind::TrafficUpdate,    link::EnvelopeKind::EvalRequest, link::EnvelopeKind::EvalResult,
        link::EnvelopeKind::ModelRequest,     link::EnvelopeKind::ModelArtifactMsg,
        link::EnvelopeKind::BenchPing,        link::EnvelopeKind::BenchPong};
    link::MessageEnvelope e;
    e.topic = random_topic_name(rng);
    e.seq = std::uniform_int_distribution<std::uint64_t>(0, (1ULL << 53))(rng);
    e.sent_at = std::uniform_int_distribution<std::int64_t>(0, 4'000'000'000'000'000LL)(rng);
    e.kind = kinds[std::uniform_int_distribution<int>(0, 6)(rng)];
    e.payload = random_bytes(rng, 48);
    return e;
}

/// Level-by-level reference matcher, written independently of the library.
inline bool reference_match(const std::vector<std::string>& f, std::size_t fi, const std::vector<std::string>& t,
                            std::size_t ti) {
    if (fi == f.size()) return ti == t.size();
    if (f[fi] == "#") return true;
    if (ti == t.size()) return false;
    if (f[fi] == "+" || f[fi] == t[ti]) return reference_match(f, fi + 1, t, ti + 1);
    return false;
}

inline std::vector<std::string> split(const std::string& s) {
    std::vector<std::string> out{""};
    for (char c : s) {
        if (c == '/') out.emplace_back();
        else out.back().push_back(c);
    }
    return out;
}

inline bool reference_topic_match(const std::string& filter, const std::string& topic) {
    const auto f = split(filter);
    const auto t = split(topic);
    if (!topic.empty() && topic[0] == '$' && (f[0] == "+" || f[0] == "#")) return false;
    return reference_match(f, 0, t, 0);
}

}  // namespace twinet::gen
