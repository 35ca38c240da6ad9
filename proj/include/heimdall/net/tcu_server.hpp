#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "heimdall/core/json.hpp"
#include "heimdall/core/profile.hpp"
#include "heimdall/net/event_hub.hpp"
#include "heimdall/net/socket.hpp"
#include "heimdall/tcu/config.hpp"

namespace heimdall::net {

struct ServerOptions {
    tcu::TcuConfig config = tcu::TcuConfig::defaults();
    /// Registered as version 1 when the registry starts empty.
    DetectorProfile initial_profile = default_detector_profile();
    /// NDJSON stream endpoint for LLUs and feeds.
    Address listen{"127.0.0.1", 0};
    /// Operator HTTP API; disabled when empty.
    std::optional<Address> http;
    std::chrono::milliseconds deploy_timeout{2000};
    /// Receives one line per protocol diagnostic (bad frame, unroutable
    /// command, sequence gap).
    std::function<void(const std::string&)> log;
};

/// Live territorial control service. Each stream connection gets a reader
/// and a writer thread; every state access, whether from a connection or
/// the HTTP API, is serialized by one lock around the TCU and its gateway.
/// Outbound frames are queued per connection in the order the gateway
/// produced them.
class TcuServer {
public:
    explicit TcuServer(ServerOptions options);
    ~TcuServer();

    TcuServer(const TcuServer&) = delete;
    TcuServer& operator=(const TcuServer&) = delete;

    /// Binds both endpoints and starts serving. Throws Error when a port
    /// cannot be bound.
    void start();
    /// Idempotent. Closes the event stream, the HTTP server and every
    /// connection, then joins all threads.
    void stop();
    /// Blocks until stop() has been called from elsewhere.
    void wait();

    std::uint16_t stream_port() const;
    std::uint16_t http_port() const;

    EventHub& events();

    /// Consistent copy of the TCU state.
    Json snapshot() const;
    std::string audit_text() const;
    std::vector<std::string> diagnostics() const;
    std::size_t open_connections() const;

    /// Registers a profile with the embedded registry; returns its version.
    int register_profile(const DetectorProfile& profile);
    /// Deploys through the connected LLUs; the report as served by
    /// POST /api/v1/profiles/{v}/deploy. The PROFILE_DEPLOY frames carry
    /// `sim_time_ms` when it is later than the TCU clock.
    Json deploy(int version, const std::vector<std::string>& targets,
                std::optional<std::int64_t> sim_time_ms = std::nullopt);

private:
    class Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace heimdall::net
