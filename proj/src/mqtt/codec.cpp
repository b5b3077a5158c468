#include "twinet/mqtt/codec.hpp"

#include <fmt/format.h>

#include <limits>
#include <type_traits>

#include "twinet/mqtt/topic.hpp"

namespace twinet::mqtt {

namespace {

constexpr std::uint8_t kProtocolLevel = 4;
constexpr std::string_view kProtocolName = "MQTT";
constexpr std::uint8_t kCleanSession = 0x02;

[[noreturn]] void fail(CodecErrc errc, const std::string& what) { throw CodecError(errc, what); }

void put_u16(Bytes& out, std::uint16_t v) {
    out.push_back(static_cast<std::uint8_t>(v >> 8));
    out.push_back(static_cast<std::uint8_t>(v & 0xFF));
}

void put_string(Bytes& out, std::string_view s) {
    if (s.size() > std::numeric_limits<std::uint16_t>::max()) {
        fail(CodecErrc::InvalidPacket, "string field longer than 65535 bytes");
    }
    if (!is_valid_utf8(s)) fail(CodecErrc::MalformedUtf8, "string field is not valid UTF-8");
    put_u16(out, static_cast<std::uint16_t>(s.size()));
    out.insert(out.end(), s.begin(), s.end());
}

class Reader {
public:
    explicit Reader(std::span<const std::uint8_t> in) : in_(in) {}

    std::uint8_t u8() {
        need(1);
        return in_[pos_++];
    }
    std::uint16_t u16() {
        need(2);
        std::uint16_t v = static_cast<std::uint16_t>((in_[pos_] << 8) | in_[pos_ + 1]);
        pos_ += 2;
        return v;
    }
    std::string utf8() {
        std::uint16_t len = u16();
        need(len);
        std::string s(reinterpret_cast<const char*>(in_.data() + pos_), len);
        pos_ += len;
        if (!is_valid_utf8(s)) fail(CodecErrc::MalformedUtf8, "string field is not valid UTF-8");
        return s;
    }
    Bytes rest() {
        Bytes b(in_.begin() + static_cast<std::ptrdiff_t>(pos_), in_.end());
        pos_ = in_.size();
        return b;
    }
    bool done() const noexcept { return pos_ == in_.size(); }
    std::size_t remaining() const noexcept { return in_.size() - pos_; }

private:
    void need(std::size_t n) const {
        if (in_.size() - pos_ < n) {
            fail(CodecErrc::LengthMismatch,
                 fmt::format("field needs {} bytes, {} left in packet", n, in_.size() - pos_));
        }
    }

    std::span<const std::uint8_t> in_;
    std::size_t pos_ = 0;
};

void expect_flags(std::uint8_t first_byte, std::uint8_t flags, PacketType type) {
    if ((first_byte & 0x0F) != flags) {
        fail(CodecErrc::InvalidFlags,
             fmt::format("{} requires flags {:#x}, got {:#x}", to_string(type), flags, first_byte & 0x0F));
    }
}

void expect_end(const Reader& r, PacketType type) {
    if (!r.done()) {
        fail(CodecErrc::LengthMismatch, fmt::format("{} has {} trailing bytes", to_string(type), r.remaining()));
    }
}

Bytes frame(std::uint8_t first_byte, const Bytes& body) {
    if (body.size() > kMaxRemainingLength) {
        fail(CodecErrc::InvalidPacket, fmt::format("packet body of {} bytes exceeds remaining-length bound", body.size()));
    }
    Bytes out;
    out.reserve(body.size() + 5);
    out.push_back(first_byte);
    append_remaining_length(static_cast<std::uint32_t>(body.size()), out);
    out.insert(out.end(), body.begin(), body.end());
    return out;
}

std::uint8_t type_byte(PacketType t, std::uint8_t flags = 0) {
    return static_cast<std::uint8_t>((static_cast<std::uint8_t>(t) << 4) | flags);
}

Bytes encode_body(const Connect& p, std::uint8_t& first) {
    first = type_byte(PacketType::Connect);
    Bytes body;
    put_string(body, kProtocolName);
    body.push_back(kProtocolLevel);
    body.push_back(kCleanSession);
    put_u16(body, 0);  // keep-alive disabled
    put_string(body, p.client_id);
    return body;
}

Bytes encode_body(const ConnAck& p, std::uint8_t& first) {
    first = type_byte(PacketType::ConnAck);
    return Bytes{0x00, p.return_code};
}

Bytes encode_body(const Publish& p, std::uint8_t& first) {
    if (!is_valid_topic_name(p.topic)) {
        fail(CodecErrc::InvalidPacket, fmt::format("invalid publish topic '{}'", p.topic));
    }
    const bool acked = p.qos == QoS::AtLeastOnce;
    if (acked != p.packet_id.has_value()) {
        fail(CodecErrc::InvalidPacket, "publish packet id must be present iff qos is 1");
    }
    if (acked && *p.packet_id == 0) fail(CodecErrc::InvalidPacket, "packet id 0 is reserved");
    first = type_byte(PacketType::Publish, static_cast<std::uint8_t>(static_cast<std::uint8_t>(p.qos) << 1));
    Bytes body;
    body.reserve(p.topic.size() + p.payload.size() + 4);
    put_string(body, p.topic);
    if (acked) put_u16(body, *p.packet_id);
    body.insert(body.end(), p.payload.begin(), p.payload.end());
    return body;
}

Bytes encode_body(const PubAck& p, std::uint8_t& first) {
    first = type_byte(PacketType::PubAck);
    Bytes body;
    put_u16(body, p.packet_id);
    return body;
}

Bytes encode_body(const Subscribe& p, std::uint8_t& first) {
    if (p.filters.empty()) fail(CodecErrc::InvalidPacket, "subscribe with no filters");
    if (p.packet_id == 0) fail(CodecErrc::InvalidPacket, "packet id 0 is reserved");
    first = type_byte(PacketType::Subscribe, 0x02);
    Bytes body;
    put_u16(body, p.packet_id);
    for (const auto& f : p.filters) {
        if (f.filter.empty()) fail(CodecErrc::InvalidPacket, "empty topic filter");
        put_string(body, f.filter);
        body.push_back(static_cast<std::uint8_t>(f.max_qos));
    }
    return body;
}

Bytes encode_body(const SubAck& p, std::uint8_t& first) {
    first = type_byte(PacketType::SubAck);
    Bytes body;
    put_u16(body, p.packet_id);
    body.insert(body.end(), p.granted.begin(), p.granted.end());
    return body;
}

Bytes encode_body(const PingReq&, std::uint8_t& first) {
    first = type_byte(PacketType::PingReq);
    return {};
}
Bytes encode_body(const PingResp&, std::uint8_t& first) {
    first = type_byte(PacketType::PingResp);
    return {};
}
Bytes encode_body(const Disconnect&, std::uint8_t& first) {
    first = type_byte(PacketType::Disconnect);
    return {};
}

QoS qos_from_bits(unsigned bits) {
    if (bits > 1) {
        fail(CodecErrc::InvalidFlags, fmt::format("QoS {} is not supported", bits));
    }
    return static_cast<QoS>(bits);
}

}  // namespace

const char* to_string(CodecErrc errc) {
    switch (errc) {
        case CodecErrc::Truncated: return "truncated";
        case CodecErrc::VarintTooLong: return "varint too long";
        case CodecErrc::ValueOutOfRange: return "value out of range";
        case CodecErrc::UnknownPacketType: return "unknown packet type";
        case CodecErrc::InvalidFlags: return "invalid flags";
        case CodecErrc::MalformedUtf8: return "malformed utf-8";
        case CodecErrc::LengthMismatch: return "length mismatch";
        case CodecErrc::InvalidPacket: return "invalid packet";
    }
    return "unknown";
}

CodecError::CodecError(CodecErrc errc, const std::string& what)
    : std::runtime_error(fmt::format("{}: {}", to_string(errc), what)), errc_(errc) {}

const char* to_string(PacketType type) {
    switch (type) {
        case PacketType::Connect: return "CONNECT";
        case PacketType::ConnAck: return "CONNACK";
        case PacketType::Publish: return "PUBLISH";
        case PacketType::PubAck: return "PUBACK";
        case PacketType::Subscribe: return "SUBSCRIBE";
        case PacketType::SubAck: return "SUBACK";
        case PacketType::PingReq: return "PINGREQ";
        case PacketType::PingResp: return "PINGRESP";
        case PacketType::Disconnect: return "DISCONNECT";
    }
    return "?";
}

PacketType packet_type(const ControlPacket& packet) {
    return std::visit(
        [](const auto& p) {
            using T = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<T, Connect>) return PacketType::Connect;
            else if constexpr (std::is_same_v<T, ConnAck>) return PacketType::ConnAck;
            else if constexpr (std::is_same_v<T, Publish>) return PacketType::Publish;
            else if constexpr (std::is_same_v<T, PubAck>) return PacketType::PubAck;
            else if constexpr (std::is_same_v<T, Subscribe>) return PacketType::Subscribe;
            else if constexpr (std::is_same_v<T, SubAck>) return PacketType::SubAck;
            else if constexpr (std::is_same_v<T, PingReq>) return PacketType::PingReq;
            else if constexpr (std::is_same_v<T, PingResp>) return PacketType::PingResp;
            else return PacketType::Disconnect;
        },
        packet);
}

void append_remaining_length(std::uint32_t n, Bytes& out) {
    if (n > kMaxRemainingLength) {
        fail(CodecErrc::ValueOutOfRange, fmt::format("remaining length {} exceeds {}", n, kMaxRemainingLength));
    }
    do {
        auto byte = static_cast<std::uint8_t>(n % 128);
        n /= 128;
        if (n > 0) byte |= 0x80;
        out.push_back(byte);
    } while (n > 0);
}

Bytes encode_remaining_length(std::uint32_t n) {
    Bytes out;
    append_remaining_length(n, out);
    return out;
}

std::optional<std::uint32_t> RemainingLengthDecoder::feed(std::uint8_t byte) {
    if (count_ == 4) fail(CodecErrc::VarintTooLong, "remaining length longer than 4 bytes");
    value_ += static_cast<std::uint32_t>(byte & 0x7F) * multiplier_;
    ++count_;
    if ((byte & 0x80) == 0) {
        std::uint32_t v = value_;
        reset();
        return v;
    }
    if (count_ == 4) fail(CodecErrc::VarintTooLong, "continuation bit set on 4th length byte");
    multiplier_ *= 128;
    return std::nullopt;
}

DecodedLength decode_remaining_length(std::span<const std::uint8_t> in) {
    RemainingLengthDecoder dec;
    for (std::size_t i = 0; i < in.size(); ++i) {
        if (auto v = dec.feed(in[i])) return {*v, i + 1};
    }
    fail(CodecErrc::Truncated, "remaining length truncated");
}

bool is_valid_utf8(std::string_view text) noexcept {
    std::size_t i = 0;
    const std::size_t n = text.size();
    while (i < n) {
        const auto c = static_cast<unsigned char>(text[i]);
        if (c == 0) return false;
        if (c < 0x80) {
            ++i;
            continue;
        }
        std::size_t len;
        std::uint32_t cp;
        if ((c & 0xE0) == 0xC0) len = 2, cp = c & 0x1F;
        else if ((c & 0xF0) == 0xE0) len = 3, cp = c & 0x0F;
        else if ((c & 0xF8) == 0xF0) len = 4, cp = c & 0x07;
        else return false;
        if (i + len > n) return false;
        for (std::size_t k = 1; k < len; ++k) {
            const auto cc = static_cast<unsigned char>(text[i + k]);
            if ((cc & 0xC0) != 0x80) return false;
            cp = (cp << 6) | (cc & 0x3F);
        }
        // overlong forms, surrogates, beyond U+10FFFF
        if ((len == 2 && cp < 0x80) || (len == 3 && cp < 0x800) || (len == 4 && cp < 0x10000)) return false;
        if (cp >= 0xD800 && cp <= 0xDFFF) return false;
        if (cp > 0x10FFFF) return false;
        i += len;
    }
    return true;
}

Bytes encode_packet(const ControlPacket& packet) {
    std::uint8_t first = 0;
    Bytes body = std::visit([&first](const auto& p) { return encode_body(p, first); }, packet);
    return frame(first, body);
}

ControlPacket decode_packet_body(std::uint8_t first_byte, std::span<const std::uint8_t> body) {
    const unsigned type_bits = first_byte >> 4;
    Reader r(body);
    switch (type_bits) {
        case 1: {
            expect_flags(first_byte, 0, PacketType::Connect);
            if (r.utf8() != kProtocolName) fail(CodecErrc::InvalidPacket, "unexpected protocol name");
            if (std::uint8_t level = r.u8(); level != kProtocolLevel) {
                fail(CodecErrc::InvalidPacket, fmt::format("unsupported protocol level {}", level));
            }
            const std::uint8_t flags = r.u8();
            if ((flags & ~kCleanSession) != 0) {
                fail(CodecErrc::InvalidPacket, fmt::format("unsupported connect flags {:#x}", flags));
            }
            (void)r.u16();  // keep-alive is not enforced
            Connect c{r.utf8()};
            expect_end(r, PacketType::Connect);
            return c;
        }
        case 2: {
            expect_flags(first_byte, 0, PacketType::ConnAck);
            (void)r.u8();  // session-present
            ConnAck a{r.u8()};
            expect_end(r, PacketType::ConnAck);
            return a;
        }
        case 3: {
            // DUP and RETAIN are tolerated on input and dropped.
            Publish p;
            p.qos = qos_from_bits((first_byte >> 1) & 0x03);
            p.topic = r.utf8();
            if (!is_valid_topic_name(p.topic)) {
                fail(CodecErrc::InvalidPacket, fmt::format("invalid publish topic '{}'", p.topic));
            }
            if (p.qos == QoS::AtLeastOnce) {
                p.packet_id = r.u16();
                if (*p.packet_id == 0) fail(CodecErrc::InvalidPacket, "packet id 0 is reserved");
            }
            p.payload = r.rest();
            return p;
        }
        case 4: {
            expect_flags(first_byte, 0, PacketType::PubAck);
            PubAck a{r.u16()};
            expect_end(r, PacketType::PubAck);
            return a;
        }
        case 8: {
            expect_flags(first_byte, 0x02, PacketType::Subscribe);
            Subscribe s;
            s.packet_id = r.u16();
            while (!r.done()) {
                SubscriptionRequest req;
                req.filter = r.utf8();
                const std::uint8_t q = r.u8();
                if (q & 0xFC) fail(CodecErrc::InvalidPacket, "reserved bits set in requested QoS");
                req.max_qos = qos_from_bits(q);
                s.filters.push_back(std::move(req));
            }
            if (s.filters.empty()) fail(CodecErrc::InvalidPacket, "subscribe with no filters");
            return s;
        }
        case 9: {
            expect_flags(first_byte, 0, PacketType::SubAck);
            SubAck a;
            a.packet_id = r.u16();
            Bytes rest = r.rest();
            a.granted.assign(rest.begin(), rest.end());
            return a;
        }
        case 12:
        case 13:
        case 14: {
            const auto type = static_cast<PacketType>(type_bits);
            expect_flags(first_byte, 0, type);
            expect_end(r, type);
            if (type == PacketType::PingReq) return PingReq{};
            if (type == PacketType::PingResp) return PingResp{};
            return Disconnect{};
        }
        default:
            fail(CodecErrc::UnknownPacketType, fmt::format("packet type {} is not supported", type_bits));
    }
}

ControlPacket decode_packet(std::span<const std::uint8_t> frame_bytes) {
    if (frame_bytes.empty()) fail(CodecErrc::Truncated, "empty frame");
    const auto len = decode_remaining_length(frame_bytes.subspan(1));
    const std::size_t header = 1 + len.consumed;
    const std::size_t actual = frame_bytes.size() - header;
    if (actual != len.value) {
        fail(CodecErrc::LengthMismatch,
             fmt::format("declared remaining length {} but {} bytes present", len.value, actual));
    }
    return decode_packet_body(frame_bytes[0], frame_bytes.subspan(header));
}

}  // namespace twinet::mqtt
