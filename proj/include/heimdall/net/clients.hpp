#pragma once

#include <chrono>
#include <condition_variable>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <thread>
#include <utility>

#include "heimdall/llu/agent.hpp"
#include "heimdall/net/socket.hpp"
#include "heimdall/protocol/envelope.hpp"

namespace heimdall::net {

/// Client end of a stream connection to the TCU. A reader thread collects
/// ACKs for `await_ack` and hands every other frame to the handler.
class PeerLink {
public:
    using Handler = std::function<void(const protocol::Envelope&)>;

    PeerLink(const Address& tcu, Handler on_message = {},
             std::chrono::milliseconds ack_timeout = std::chrono::milliseconds(5000));
    ~PeerLink();

    PeerLink(const PeerLink&) = delete;
    PeerLink& operator=(const PeerLink&) = delete;

    bool send(const protocol::Envelope& envelope);
    /// nullopt on timeout or once the connection has closed.
    std::optional<protocol::AckPayload> await_ack(protocol::MessageType of, std::uint64_t seq);
    std::optional<protocol::AckPayload> request(const protocol::Envelope& envelope);

    bool connected() const;
    void close();

private:
    void read_loop();

    FrameStream stream_;
    Handler on_message_;
    std::chrono::milliseconds ack_timeout_;
    mutable std::mutex mu_;
    std::condition_variable cv_;
    std::map<std::pair<protocol::MessageType, std::uint64_t>, protocol::AckPayload> acks_;
    bool open_ = true;
    std::thread reader_;
};

/// An LLU agent attached to a live TCU. Commands and deployments are
/// answered on the reader thread; scene events are processed on the
/// caller's thread. The agent is guarded by one mutex so envelope sequence
/// numbers go out in order.
class LluClient {
public:
    LluClient(std::unique_ptr<LluAgent> agent, const Address& tcu,
              std::chrono::milliseconds ack_timeout = std::chrono::milliseconds(5000));

    /// Announces the lamppost with a HEARTBEAT so the TCU can route to it;
    /// returns whether the TCU acknowledged.
    bool hello(std::int64_t now_ms);

    struct SceneOutcome {
        bool reported = false;
        std::optional<protocol::AckPayload> ack;
    };

    /// Runs the detector and, on a detection, sends the REPORT and waits for
    /// its ACK.
    SceneOutcome scene(const SceneEvent& event);

    LamppostDescriptor descriptor() const;
    std::uint64_t reports_emitted() const;
    std::uint64_t commands_received() const;
    void close() { link_->close(); }

private:
    void on_message(const protocol::Envelope& env);

    std::unique_ptr<LluAgent> agent_;
    mutable std::mutex agent_mu_;
    std::uint64_t commands_ = 0;
    std::unique_ptr<PeerLink> link_;
};

}  // namespace heimdall::net
