#pragma once

#include <atomic>
#include <condition_variable>
#include <list>
#include <memory>
#include <mutex>
#include <thread>

#include "twinet/broker/broker.hpp"
#include "twinet/net/socket.hpp"

namespace twinet::broker {

/// TCP front-end for BrokerCore: one reader thread per connection, frames
/// are routed on the reader thread that decoded them.
class TcpBroker {
public:
    explicit TcpBroker(net::Endpoint bind);
    ~TcpBroker();
    TcpBroker(const TcpBroker&) = delete;
    TcpBroker& operator=(const TcpBroker&) = delete;

    /// Binds and starts accepting. Throws net::NetError if the address is not bindable.
    void start();
    void stop();
    /// Blocks until stop() is called from another thread.
    void wait();

    bool running() const noexcept { return running_; }
    std::uint16_t port() const noexcept { return port_; }
    net::Endpoint endpoint() const { return {bind_.host == "0.0.0.0" ? "127.0.0.1" : bind_.host, port_}; }

    BrokerStats stats() const { return core_.stats(); }
    BrokerCore& core() noexcept { return core_; }

private:
    struct Connection;

    void accept_loop();
    void serve(Connection& conn);
    void reap_finished();

    net::Endpoint bind_;
    std::uint16_t port_ = 0;
    BrokerCore core_;
    net::Socket listener_;
    std::thread accept_thread_;
    std::atomic<bool> running_{false};

    std::mutex conn_mutex_;
    std::condition_variable stopped_cv_;
    std::list<std::unique_ptr<Connection>> connections_;
};

}  // namespace twinet::broker
