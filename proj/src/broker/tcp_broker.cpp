#include "twinet/broker/tcp_broker.hpp"

#include <spdlog/spdlog.h>

#include "twinet/mqtt/codec.hpp"

namespace twinet::broker {

namespace {

class TcpSink final : public SessionSink {
public:
    explicit TcpSink(net::Socket& socket) : socket_(socket) {}
    bool send(const mqtt::Bytes& frame) override { return socket_.send_all(frame); }
    void close() override { socket_.shutdown(); }

private:
    net::Socket& socket_;
};

}  // namespace

struct TcpBroker::Connection {
    net::Socket socket;
    std::thread thread;
    std::atomic<bool> done{false};
};

TcpBroker::TcpBroker(net::Endpoint bind) : bind_(std::move(bind)) {}

TcpBroker::~TcpBroker() { stop(); }

void TcpBroker::start() {
    listener_ = net::listen_tcp(bind_);
    port_ = listener_.local_port();
    running_ = true;
    accept_thread_ = std::thread([this] { accept_loop(); });
    spdlog::info("broker: listening on {}:{}", bind_.host, port_);
}

void TcpBroker::stop() {
    if (!running_.exchange(false)) return;
    listener_.shutdown();
    if (accept_thread_.joinable()) accept_thread_.join();
    listener_.close();

    std::list<std::unique_ptr<Connection>> conns;
    {
        std::lock_guard lock(conn_mutex_);
        for (auto& c : connections_) c->socket.shutdown();
        conns.swap(connections_);
    }
    for (auto& c : conns) {
        if (c->thread.joinable()) c->thread.join();
    }
    { std::lock_guard lock(conn_mutex_); }
    stopped_cv_.notify_all();
    spdlog::info("broker: stopped");
}

void TcpBroker::wait() {
    std::unique_lock lock(conn_mutex_);
    stopped_cv_.wait(lock, [this] { return !running_; });
}

void TcpBroker::accept_loop() {
    while (running_) {
        net::Socket sock = net::accept_tcp(listener_);
        if (!sock.valid()) break;
        std::lock_guard lock(conn_mutex_);
        if (!running_) break;
        reap_finished();
        auto conn = std::make_unique<Connection>();
        conn->socket = std::move(sock);
        Connection& ref = *conn;
        connections_.push_back(std::move(conn));
        ref.thread = std::thread([this, &ref] { serve(ref); });
    }
}

void TcpBroker::reap_finished() {
    // caller holds conn_mutex_
    for (auto it = connections_.begin(); it != connections_.end();) {
        if ((*it)->done) {
            if ((*it)->thread.joinable()) (*it)->thread.join();
            it = connections_.erase(it);
        } else {
            ++it;
        }
    }
}

void TcpBroker::serve(Connection& conn) {
    auto session = core_.open(std::make_shared<TcpSink>(conn.socket));
    net::FrameReader reader(conn.socket);
    std::uint64_t counted = 0;
    try {
        while (auto packet = reader.next()) {
            core_.add_bytes_in(reader.bytes_read() - counted);
            counted = reader.bytes_read();
            if (!core_.on_packet(*session, *packet)) break;
        }
    } catch (const mqtt::CodecError& e) {
        core_.count_protocol_error();
        spdlog::warn("broker: closing '{}' on malformed frame: {}", session->client_id(), e.what());
    }
    conn.socket.shutdown();
    core_.on_closed(*session);
    conn.done = true;
}

}  // namespace twinet::broker
