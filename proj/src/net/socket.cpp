#include "heimdall/net/socket.hpp"

#include <arpa/inet.h>
#include <fcntl.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <charconv>
#include <cstring>

#include "heimdall/core/error.hpp"

namespace heimdall::net {

namespace {

sockaddr_in resolve(const Address& a) {
    sockaddr_in sa{};
    sa.sin_family = AF_INET;
    sa.sin_port = htons(a.port);
    const std::string host = a.host.empty() || a.host == "localhost" ? "127.0.0.1" : a.host;
    if (inet_pton(AF_INET, host.c_str(), &sa.sin_addr) == 1) {
        return sa;
    }
    addrinfo hints{};
    hints.ai_family = AF_INET;
    hints.ai_socktype = SOCK_STREAM;
    addrinfo* res = nullptr;
    if (getaddrinfo(host.c_str(), nullptr, &hints, &res) != 0 || res == nullptr) {
        throw Error("cannot resolve host " + host);
    }
    sa.sin_addr = reinterpret_cast<sockaddr_in*>(res->ai_addr)->sin_addr;
    freeaddrinfo(res);
    return sa;
}

std::string errno_text() {
    return std::strerror(errno);
}

}  // namespace

std::string Address::to_string() const {
    return host + ":" + std::to_string(port);
}

Address parse_address(std::string_view text) {
    const auto colon = text.rfind(':');
    if (colon == std::string_view::npos) {
        throw ValidationError("address must be host:port, got '" + std::string(text) + "'", "address");
    }
    Address a;
    if (colon > 0) {
        a.host = std::string(text.substr(0, colon));
    }
    const std::string_view port = text.substr(colon + 1);
    unsigned value = 0;
    const auto [end, ec] = std::from_chars(port.data(), port.data() + port.size(), value);
    if (ec != std::errc{} || end != port.data() + port.size() || value > 65535) {
        throw ValidationError("invalid port in address '" + std::string(text) + "'", "address");
    }
    a.port = static_cast<std::uint16_t>(value);
    return a;
}

Socket::~Socket() {
    close();
}

Socket& Socket::operator=(Socket&& other) noexcept {
    if (this != &other) {
        close();
        fd_ = std::exchange(other.fd_, -1);
    }
    return *this;
}

void Socket::shutdown() noexcept {
    if (fd_ >= 0) {
        ::shutdown(fd_, SHUT_RDWR);
    }
}

void Socket::close() noexcept {
    if (fd_ >= 0) {
        ::close(fd_);
        fd_ = -1;
    }
}

Socket listen_tcp(const Address& address, int backlog) {
    Socket s(::socket(AF_INET, SOCK_STREAM | SOCK_CLOEXEC, 0));
    if (!s.valid()) {
        throw Error("socket: " + errno_text());
    }
    const int one = 1;
    ::setsockopt(s.fd(), SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
    const sockaddr_in sa = resolve(address);
    if (::bind(s.fd(), reinterpret_cast<const sockaddr*>(&sa), sizeof sa) != 0) {
        throw Error("cannot bind " + address.to_string() + ": " + errno_text());
    }
    if (::listen(s.fd(), backlog) != 0) {
        throw Error("cannot listen on " + address.to_string() + ": " + errno_text());
    }
    return s;
}

std::uint16_t local_port(const Socket& socket) {
    sockaddr_in sa{};
    socklen_t len = sizeof sa;
    if (::getsockname(socket.fd(), reinterpret_cast<sockaddr*>(&sa), &len) != 0) {
        throw Error("getsockname: " + errno_text());
    }
    return ntohs(sa.sin_port);
}

Socket accept_tcp(const Socket& listener) {
    while (true) {
        const int fd = ::accept4(listener.fd(), nullptr, nullptr, SOCK_CLOEXEC);
        if (fd >= 0) {
            const int one = 1;
            ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
            return Socket(fd);
        }
        if (errno != EINTR && errno != ECONNABORTED) {
            return Socket();
        }
    }
}

Socket connect_tcp(const Address& address, std::chrono::milliseconds timeout) {
    const sockaddr_in sa = resolve(address);
    const auto deadline = std::chrono::steady_clock::now() + timeout;
    while (true) {
        Socket s(::socket(AF_INET, SOCK_STREAM | SOCK_CLOEXEC, 0));
        if (!s.valid()) {
            throw Error("socket: " + errno_text());
        }
        if (::connect(s.fd(), reinterpret_cast<const sockaddr*>(&sa), sizeof sa) == 0) {
            const int one = 1;
            ::setsockopt(s.fd(), IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
            return s;
        }
        if (std::chrono::steady_clock::now() >= deadline) {
            throw Error("cannot connect to " + address.to_string() + ": " + errno_text());
        }
        ::poll(nullptr, 0, 50);
    }
}

bool FrameStream::send(const protocol::Envelope& envelope) {
    return send_raw(protocol::encode(envelope));
}

bool FrameStream::send_raw(std::string_view frame) {
    std::lock_guard lock(write_mu_);
    while (!frame.empty()) {
        const ssize_t n = ::send(socket_.fd(), frame.data(), frame.size(), MSG_NOSIGNAL);
        if (n < 0) {
            if (errno == EINTR) {
                continue;
            }
            return false;
        }
        frame.remove_prefix(static_cast<std::size_t>(n));
    }
    return true;
}

std::optional<std::string> FrameStream::read_frame() {
    char buf[4096];
    while (true) {
        if (auto frame = splitter_.next()) {
            return frame;
        }
        if (eof_) {
            return std::nullopt;
        }
        const ssize_t n = ::recv(socket_.fd(), buf, sizeof buf, 0);
        if (n < 0 && errno == EINTR) {
            continue;
        }
        if (n <= 0) {
            eof_ = true;
            continue;
        }
        splitter_.feed(std::string_view(buf, static_cast<std::size_t>(n)));
    }
}

}  // namespace heimdall::net
