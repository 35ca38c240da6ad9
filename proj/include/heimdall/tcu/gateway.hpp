#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "heimdall/protocol/envelope.hpp"
#include "heimdall/tcu/tcu.hpp"

namespace heimdall::tcu {

struct Outbound {
    /// Wire identity of the recipient, e.g. "llu:L1".
    std::string destination;
    protocol::Envelope envelope;
};

/// Transport-independent message front of the TCU: deduplicates by
/// (sender, seq), dispatches by type and turns the TCU's outbox into
/// COMMAND envelopes. Every inbound frame except an ACK is acknowledged, so
/// a sender that waits for its ACK knows the frame has been applied. The
/// same instance serves `sim run` and `tcu serve`.
class Gateway {
public:
    using ProfileAckHandler =
        std::function<void(const std::string& lamppost_id, const protocol::AckPayload& ack)>;

    explicit Gateway(TerritorialControlUnit& tcu, std::string identity = "tcu");

    std::vector<Outbound> handle(const protocol::Envelope& in);

    void set_profile_ack_handler(ProfileAckHandler handler) { on_profile_ack_ = std::move(handler); }

    /// Wraps pending TCU commands (e.g. after an operator action) into
    /// envelopes.
    std::vector<Outbound> flush_commands(std::int64_t now_ms);

    std::uint64_t duplicates_dropped() const noexcept { return duplicates_; }
    std::uint64_t seq_gaps() const noexcept { return gaps_; }
    const std::vector<std::string>& diagnostics() const noexcept { return diagnostics_; }
    const std::map<std::string, std::int64_t>& last_heard() const noexcept { return last_heard_; }

private:
    protocol::Envelope ack(const protocol::Envelope& in, bool ok, std::string detail);

    TerritorialControlUnit& tcu_;
    std::string identity_;
    std::uint64_t seq_ = 0;
    protocol::SequenceTracker tracker_;
    ProfileAckHandler on_profile_ack_;
    std::uint64_t duplicates_ = 0;
    std::uint64_t gaps_ = 0;
    std::vector<std::string> diagnostics_;
    std::map<std::string, std::int64_t> last_heard_;
};

/// Lamppost id from an "llu:<id>" sender; empty for other senders.
std::string lamppost_of_sender(const std::string& sender);

}  // namespace heimdall::tcu
