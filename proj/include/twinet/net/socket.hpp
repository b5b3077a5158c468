#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>

#include "twinet/mqtt/packet.hpp"

namespace twinet::net {

class NetError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Endpoint {
    std::string host = "127.0.0.1";
    std::uint16_t port = 1883;

    /// Accepts "host:port", ":port" or "port".
    static Endpoint parse(std::string_view text);
    std::string str() const;
};

/// Owning wrapper for a connected or listening TCP socket.
class Socket {
public:
    Socket() = default;
    explicit Socket(int fd) noexcept : fd_(fd) {}
    ~Socket();
    Socket(Socket&& other) noexcept;
    Socket& operator=(Socket&& other) noexcept;
    Socket(const Socket&) = delete;
    Socket& operator=(const Socket&) = delete;

    int fd() const noexcept { return fd_; }
    bool valid() const noexcept { return fd_ >= 0; }

    /// Wakes any thread blocked on the socket without releasing the descriptor.
    void shutdown() noexcept;
    void close() noexcept;

    /// Returns false when the peer is gone.
    bool send_all(std::span<const std::uint8_t> data) noexcept;

    /// Returns false on orderly EOF or error before n bytes were read.
    bool recv_exact(std::span<std::uint8_t> out) noexcept;

    std::uint16_t local_port() const;

private:
    int fd_ = -1;
};

Socket connect_tcp(const Endpoint& endpoint, std::chrono::milliseconds timeout);
Socket listen_tcp(const Endpoint& endpoint, int backlog = 64);

/// Accepts one connection; returns an invalid socket once the listener is shut down.
Socket accept_tcp(Socket& listener);

/// Reads whole MQTT frames off a stream socket.
class FrameReader {
public:
    explicit FrameReader(Socket& socket, std::uint32_t max_frame = mqtt::kMaxRemainingLength)
        : socket_(socket), max_frame_(max_frame) {}

    /// Returns nullopt on EOF; throws mqtt::CodecError on malformed input.
    std::optional<mqtt::ControlPacket> next();

    std::uint64_t bytes_read() const noexcept { return bytes_read_; }

private:
    Socket& socket_;
    std::uint32_t max_frame_;
    std::uint64_t bytes_read_ = 0;
    mqtt::Bytes body_;
};

}  // namespace twinet::net
