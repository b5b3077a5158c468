#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>

#include "twinet/mqtt/packet.hpp"

namespace twinet::mqtt {

enum class CodecErrc {
    Truncated,            // input ended before the frame / field was complete
    VarintTooLong,        // continuation bit set on the 4th length byte
    ValueOutOfRange,      // remaining length above kMaxRemainingLength
    UnknownPacketType,    // type nibble outside the supported subset
    InvalidFlags,         // fixed-header flags not allowed for the type
    MalformedUtf8,        // text field is not well-formed UTF-8 or has U+0000
    LengthMismatch,       // declared remaining length != bytes present
    InvalidPacket,        // structurally valid framing, semantically invalid packet
};

const char* to_string(CodecErrc errc);

class CodecError : public std::runtime_error {
public:
    CodecError(CodecErrc errc, const std::string& what);
    CodecErrc code() const noexcept { return errc_; }

private:
    CodecErrc errc_;
};

// Remaining-length varint (little-endian base-128 with continuation bit).
Bytes encode_remaining_length(std::uint32_t n);
void append_remaining_length(std::uint32_t n, Bytes& out);

struct DecodedLength {
    std::uint32_t value = 0;
    std::size_t consumed = 0;
};
DecodedLength decode_remaining_length(std::span<const std::uint8_t> in);

/// Byte-at-a-time remaining-length decoder for stream readers.
class RemainingLengthDecoder {
public:
    /// Returns the value once the final byte has been fed.
    std::optional<std::uint32_t> feed(std::uint8_t byte);
    void reset() noexcept { value_ = 0, multiplier_ = 1, count_ = 0; }

private:
    std::uint32_t value_ = 0;
    std::uint32_t multiplier_ = 1;
    int count_ = 0;
};

bool is_valid_utf8(std::string_view text) noexcept;

Bytes encode_packet(const ControlPacket& packet);

/// Decodes exactly one complete frame.
ControlPacket decode_packet(std::span<const std::uint8_t> frame);

/// Decodes a frame whose fixed header has already been consumed.
ControlPacket decode_packet_body(std::uint8_t first_byte, std::span<const std::uint8_t> body);

}  // namespace twinet::mqtt
