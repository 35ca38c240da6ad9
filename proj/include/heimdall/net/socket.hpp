#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <utility>

#include "heimdall/protocol/envelope.hpp"

namespace heimdall::net {

struct Address {
    std::string host = "127.0.0.1";
    std::uint16_t port = 0;

    std::string to_string() const;
};

/// Parses "host:port" or ":port". Throws ValidationError.
Address parse_address(std::string_view text);

/// Owns a socket descriptor; closes it on destruction.
class Socket {
public:
    Socket() = default;
    explicit Socket(int fd) : fd_(fd) {}
    ~Socket();
    Socket(Socket&& other) noexcept : fd_(std::exchange(other.fd_, -1)) {}
    Socket& operator=(Socket&& other) noexcept;
    Socket(const Socket&) = delete;
    Socket& operator=(const Socket&) = delete;

    int fd() const noexcept { return fd_; }
    bool valid() const noexcept { return fd_ >= 0; }
    /// Shuts both directions down so a blocked reader wakes up.
    void shutdown() noexcept;
    void close() noexcept;

private:
    int fd_ = -1;
};

/// Bound, listening TCP socket. Port 0 picks an ephemeral port.
Socket listen_tcp(const Address& address, int backlog = 64);
std::uint16_t local_port(const Socket& socket);
/// Blocks until a client connects; an invalid socket once the listener has
/// been shut down.
Socket accept_tcp(const Socket& listener);
/// Throws Error when the connection cannot be made within `timeout`.
Socket connect_tcp(const Address& address,
                   std::chrono::milliseconds timeout = std::chrono::milliseconds(5000));

/// Newline-delimited envelope stream over a connected socket. Sends are
/// serialized by an internal mutex; reading is meant for a single thread.
class FrameStream {
public:
    explicit FrameStream(Socket socket) : socket_(std::move(socket)) {}

    /// False once the peer has gone away.
    bool send(const protocol::Envelope& envelope);
    bool send_raw(std::string_view frame);

    /// Next complete frame, or nullopt on end of stream.
    std::optional<std::string> read_frame();

    void shutdown() noexcept { socket_.shutdown(); }

private:
    Socket socket_;
    std::mutex write_mu_;
    protocol::FrameSplitter splitter_;
    bool eof_ = false;
};

}  // namespace heimdall::net
