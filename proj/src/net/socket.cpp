#include "twinet/net/socket.hpp"

#include <arpa/inet.h>
#include <fcntl.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <fmt/format.h>

#include <cerrno>
#include <charconv>
#include <cstring>

#include "twinet/mqtt/codec.hpp"

namespace twinet::net {

namespace {

sockaddr_in resolve(const Endpoint& ep) {
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(ep.port);
    std::string host = ep.host.empty() || ep.host == "localhost" ? "127.0.0.1" : ep.host;
    if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) == 1) return addr;

    addrinfo hints{};
    hints.ai_family = AF_INET;
    hints.ai_socktype = SOCK_STREAM;
    addrinfo* res = nullptr;
    if (int rc = ::getaddrinfo(host.c_str(), nullptr, &hints, &res); rc != 0 || res == nullptr) {
        throw NetError(fmt::format("cannot resolve '{}': {}", host, ::gai_strerror(rc)));
    }
    addr.sin_addr = reinterpret_cast<sockaddr_in*>(res->ai_addr)->sin_addr;
    ::freeaddrinfo(res);
    return addr;
}

void set_nodelay(int fd) {
    int one = 1;
    ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
}

}  // namespace

Endpoint Endpoint::parse(std::string_view text) {
    Endpoint ep;
    std::string_view port_text = text;
    if (auto colon = text.rfind(':'); colon != std::string_view::npos) {
        if (colon > 0) ep.host = std::string(text.substr(0, colon));
        port_text = text.substr(colon + 1);
    }
    unsigned value = 0;
    auto [ptr, ec] = std::from_chars(port_text.data(), port_text.data() + port_text.size(), value);
    if (ec != std::errc{} || ptr != port_text.data() + port_text.size() || value > 65535) {
        throw NetError(fmt::format("invalid endpoint '{}'", text));
    }
    ep.port = static_cast<std::uint16_t>(value);
    return ep;
}

std::string Endpoint::str() const { return fmt::format("{}:{}", host, port); }

Socket::~Socket() { close(); }

Socket::Socket(Socket&& other) noexcept : fd_(other.fd_) { other.fd_ = -1; }

Socket& Socket::operator=(Socket&& other) noexcept {
    if (this != &other) {
        close();
        fd_ = other.fd_;
        other.fd_ = -1;
    }
    return *this;
}

void Socket::shutdown() noexcept {
    if (fd_ >= 0) ::shutdown(fd_, SHUT_RDWR);
}

void Socket::close() noexcept {
    if (fd_ >= 0) {
        ::close(fd_);
        fd_ = -1;
    }
}

bool Socket::send_all(std::span<const std::uint8_t> data) noexcept {
    std::size_t sent = 0;
    while (sent < data.size()) {
        ssize_t n = ::send(fd_, data.data() + sent, data.size() - sent, MSG_NOSIGNAL);
        if (n < 0) {
            if (errno == EINTR) continue;
            return false;
        }
        sent += static_cast<std::size_t>(n);
    }
    return true;
}

bool Socket::recv_exact(std::span<std::uint8_t> out) noexcept {
    std::size_t got = 0;
    while (got < out.size()) {
        ssize_t n = ::recv(fd_, out.data() + got, out.size() - got, 0);
        if (n == 0) return false;
        if (n < 0) {
            if (errno == EINTR) continue;
            return false;
        }
        got += static_cast<std::size_t>(n);
    }
    return true;
}

std::uint16_t Socket::local_port() const {
    sockaddr_in addr{};
    socklen_t len = sizeof(addr);
    if (::getsockname(fd_, reinterpret_cast<sockaddr*>(&addr), &len) != 0) {
        throw NetError(fmt::format("getsockname failed: {}", std::strerror(errno)));
    }
    return ntohs(addr.sin_port);
}

Socket connect_tcp(const Endpoint& endpoint, std::chrono::milliseconds timeout) {
    const sockaddr_in addr = resolve(endpoint);
    Socket sock(::socket(AF_INET, SOCK_STREAM | SOCK_CLOEXEC, 0));
    if (!sock.valid()) throw NetError(fmt::format("socket failed: {}", std::strerror(errno)));

    const int flags = ::fcntl(sock.fd(), F_GETFL, 0);
    ::fcntl(sock.fd(), F_SETFL, flags | O_NONBLOCK);
    int rc = ::connect(sock.fd(), reinterpret_cast<const sockaddr*>(&addr), sizeof(addr));
    if (rc != 0 && errno != EINPROGRESS) {
        throw NetError(fmt::format("connect to {} failed: {}", endpoint.str(), std::strerror(errno)));
    }
    if (rc != 0) {
        pollfd pfd{sock.fd(), POLLOUT, 0};
        rc = ::poll(&pfd, 1, static_cast<int>(timeout.count()));
        if (rc == 0) throw NetError(fmt::format("connect to {} timed out", endpoint.str()));
        int err = 0;
        socklen_t len = sizeof(err);
        ::getsockopt(sock.fd(), SOL_SOCKET, SO_ERROR, &err, &len);
        if (rc < 0 || err != 0) {
            throw NetError(fmt::format("connect to {} failed: {}", endpoint.str(), std::strerror(err ? err : errno)));
        }
    }
    ::fcntl(sock.fd(), F_SETFL, flags);
    set_nodelay(sock.fd());
    return sock;
}

Socket listen_tcp(const Endpoint& endpoint, int backlog) {
    const sockaddr_in addr = resolve(endpoint);
    Socket sock(::socket(AF_INET, SOCK_STREAM | SOCK_CLOEXEC, 0));
    if (!sock.valid()) throw NetError(fmt::format("socket failed: {}", std::strerror(errno)));
    int one = 1;
    ::setsockopt(sock.fd(), SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
    if (::bind(sock.fd(), reinterpret_cast<const sockaddr*>(&addr), sizeof(addr)) != 0) {
        throw NetError(fmt::format("bind to {} failed: {}", endpoint.str(), std::strerror(errno)));
    }
    if (::listen(sock.fd(), backlog) != 0) {
        throw NetError(fmt::format("listen on {} failed: {}", endpoint.str(), std::strerror(errno)));
    }
    return sock;
}

Socket accept_tcp(Socket& listener) {
    while (true) {
        int fd = ::accept4(listener.fd(), nullptr, nullptr, SOCK_CLOEXEC);
        if (fd >= 0) {
            set_nodelay(fd);
            return Socket(fd);
        }
        if (errno == EINTR || errno == ECONNABORTED) continue;
        return Socket();
    }
}

std::optional<mqtt::ControlPacket> FrameReader::next() {
    std::uint8_t first = 0;
    if (!socket_.recv_exact({&first, 1})) return std::nullopt;
    mqtt::RemainingLengthDecoder dec;
    std::optional<std::uint32_t> len;
    std::size_t header = 1;
    while (!len) {
        std::uint8_t b = 0;
        if (!socket_.recv_exact({&b, 1})) {
            throw mqtt::CodecError(mqtt::CodecErrc::Truncated, "stream ended inside fixed header");
        }
        ++header;
        len = dec.feed(b);
    }
    if (*len > max_frame_) {
        throw mqtt::CodecError(mqtt::CodecErrc::ValueOutOfRange,
                               fmt::format("frame of {} bytes exceeds limit {}", *len, max_frame_));
    }
    body_.resize(*len);
    if (*len > 0 && !socket_.recv_exact(body_)) {
        throw mqtt::CodecError(mqtt::CodecErrc::Truncated, "stream ended inside packet body");
    }
    bytes_read_ += header + *len;
    return mqtt::decode_packet_body(first, body_);
}

}  // namespace twinet::net
