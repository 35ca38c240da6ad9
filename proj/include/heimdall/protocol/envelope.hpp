#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "heimdall/core/json.hpp"
#include "heimdall/core/profile.hpp"
#include "heimdall/core/types.hpp"
#include "heimdall/llu/signalling.hpp"
#include "heimdall/risk/risk_engine.hpp"

namespace heimdall::protocol {

inline constexpr int kSchemaVersion = 1;

enum class MessageType { report, command, ack, feed_update, heartbeat, profile_deploy };

/// Wire names: REPORT, COMMAND, ACK, FEED_UPDATE, HEARTBEAT, PROFILE_DEPLOY.
std::string_view to_string(MessageType t) noexcept;
std::optional<MessageType> message_type_from_string(std::string_view name) noexcept;

struct Envelope {
    MessageType type = MessageType::heartbeat;
    std::uint64_t seq = 0;
    std::string sender;
    std::int64_t sent_sim_time_ms = 0;
    Json payload = Json::object();

    bool operator==(const Envelope&) const = default;
};

/// One canonical NDJSON line: keys in the order type, seq, sender,
/// sent_sim_time_ms, payload; terminated by exactly one '\n'.
/// Throws ProtocolError (field "payload") if the payload cannot be serialized.
std::string encode(const Envelope& envelope);

/// Strict decode of one frame (must end in '\n'). Throws ProtocolError naming
/// the offending field, or carrying the byte offset for malformed JSON.
/// Payload keys beyond the schema are kept.
Envelope decode(std::string_view frame);

/// Payload schema check for `type`; throws like decode.
void validate_payload(MessageType type, const Json& payload);

// Typed payloads.

struct CommandPayload {
    std::string lamppost_id;
    /// Target mode. Absent only when clearing an override.
    std::optional<SignallingMode> mode;
    bool override_cmd = false;
    std::string reason;
    std::optional<std::string> alert_id;

    bool operator==(const CommandPayload&) const = default;
};

struct AckPayload {
    MessageType ack_of = MessageType::report;
    std::uint64_t ref_seq = 0;
    bool ok = true;
    std::string detail;
    std::optional<int> profile_version;

    bool operator==(const AckPayload&) const = default;
};

struct HeartbeatPayload {
    std::string role;
    std::optional<int> profile_version;

    bool operator==(const HeartbeatPayload&) const = default;
};

struct ProfileDeployPayload {
    std::string lamppost_id;
    DetectorProfile profile;

    bool operator==(const ProfileDeployPayload&) const = default;
};

Envelope make_report(std::string sender, std::uint64_t seq, const AnomalyReport& report);
Envelope make_command(std::string sender, std::uint64_t seq, std::int64_t now_ms,
                      const CommandPayload& cmd);
Envelope make_ack(std::string sender, std::uint64_t seq, std::int64_t now_ms, const AckPayload& ack);
Envelope make_feed_update(std::string sender, std::uint64_t seq, const risk::RiskSignal& signal);
Envelope make_heartbeat(std::string sender, std::uint64_t seq, std::int64_t now_ms,
                        const HeartbeatPayload& hb);
Envelope make_profile_deploy(std::string sender, std::uint64_t seq, std::int64_t now_ms,
                             const ProfileDeployPayload& deploy);

// Accessors throw ProtocolError when the envelope has another type.
AnomalyReport report_of(const Envelope& e);
CommandPayload command_of(const Envelope& e);
AckPayload ack_of(const Envelope& e);
risk::RiskSignal feed_signal_of(const Envelope& e);
HeartbeatPayload heartbeat_of(const Envelope& e);
ProfileDeployPayload profile_deploy_of(const Envelope& e);

/// Splits a byte stream into complete '\n'-terminated frames; keeps any
/// trailing partial frame buffered until more bytes arrive.
class FrameSplitter {
public:
    void feed(std::string_view bytes);
    std::optional<std::string> next();
    bool has_partial() const noexcept { return !buffer_.empty(); }

private:
    std::string buffer_;
};

/// Per-sender sequence bookkeeping for at-least-once delivery.
class SequenceTracker {
public:
    enum class Verdict { fresh, duplicate, gap };

    struct Observation {
        Verdict verdict;
        std::uint64_t missing = 0;  // number of skipped seqs when verdict == gap
    };

    /// A seq at or below the highest seen for that sender is a duplicate.
    Observation observe(const std::string& sender, std::uint64_t seq);

private:
    std::map<std::string, std::uint64_t> last_seen_;
};

}  // namespace heimdall::protocol
