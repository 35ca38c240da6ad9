#include "heimdall/protocol/envelope.hpp"

#include <array>

#include "heimdall/core/error.hpp"

namespace heimdall::protocol {

namespace {

constexpr std::array<std::string_view, 6> kTypeNames = {
    "REPORT", "COMMAND", "ACK", "FEED_UPDATE", "HEARTBEAT", "PROFILE_DEPLOY"};

constexpr std::array<std::string_view, 5> kEnvelopeKeys = {"type", "seq", "sender",
                                                           "sent_sim_time_ms", "payload"};

constexpr std::string_view kPayload = "payload";

Json versioned() {
    Json j = Json::object();
    j["v"] = kSchemaVersion;
    return j;
}

void expect_type(const Envelope& e, MessageType t) {
    if (e.type != t) {
        throw ProtocolError("expected " + std::string(to_string(t)) + " envelope, got " +
                                std::string(to_string(e.type)),
                            "type");
    }
}

std::optional<SignallingMode> optional_mode(const Json& p) {
    const Json& m = json_field::require(p, "mode", kPayload);
    if (m.is_null()) {
        return std::nullopt;
    }
    const std::string name = json_field::get_string(p, "mode", kPayload);
    const auto mode = signalling_mode_from_string(name);
    if (!mode) {
        throw ProtocolError("payload.mode: unknown signalling mode " + name, "mode");
    }
    return mode;
}

std::optional<int> optional_version(const Json& p, std::string_view key) {
    if (!json_field::has(p, key) || p.at(key).is_null()) {
        return std::nullopt;
    }
    return static_cast<int>(json_field::get_int_in(p, key, 1, INT32_MAX, kPayload));
}

CommandPayload parse_command(const Json& p) {
    using namespace json_field;
    CommandPayload c;
    c.lamppost_id = get_string(p, "lamppost_id", kPayload);
    c.mode = optional_mode(p);
    c.override_cmd = get_bool(p, "override", kPayload);
    c.reason = get_string(p, "reason", kPayload);
    if (has(p, "alert_id") && !p.at("alert_id").is_null()) {
        c.alert_id = get_string(p, "alert_id", kPayload);
    }
    if (!c.mode && !c.override_cmd) {
        throw ProtocolError("payload.mode: null mode is only valid for override clear", "mode");
    }
    return c;
}

AckPayload parse_ack(const Json& p) {
    using namespace json_field;
    AckPayload a;
    const std::string of = get_string(p, "ack_of", kPayload);
    const auto t = message_type_from_string(of);
    if (!t) {
        throw ProtocolError("payload.ack_of: unknown type " + of, "ack_of");
    }
    a.ack_of = *t;
    a.ref_seq = static_cast<std::uint64_t>(get_int_in(p, "ref_seq", 0, INT64_MAX, kPayload));
    a.ok = get_bool(p, "ok", kPayload);
    a.detail = get_string(p, "detail", kPayload);
    a.profile_version = optional_version(p, "profile_version");
    return a;
}

HeartbeatPayload parse_heartbeat(const Json& p) {
    HeartbeatPayload h;
    h.role = json_field::get_string(p, "role", kPayload);
    h.profile_version = optional_version(p, "profile_version");
    return h;
}

ProfileDeployPayload parse_profile_deploy(const Json& p) {
    ProfileDeployPayload d;
    d.lamppost_id = json_field::get_string(p, "lamppost_id", kPayload);
    d.profile = detector_profile_from_json(json_field::require(p, "profile", kPayload),
                                           "payload.profile");
    return d;
}

}  // namespace

std::string_view to_string(MessageType t) noexcept {
    return kTypeNames[static_cast<std::size_t>(t)];
}

std::optional<MessageType> message_type_from_string(std::string_view name) noexcept {
    for (std::size_t i = 0; i < kTypeNames.size(); ++i) {
        if (kTypeNames[i] == name) {
            return static_cast<MessageType>(i);
        }
    }
    return std::nullopt;
}

std::string encode(const Envelope& e) {
    Json j = Json::object();
    j["type"] = std::string(to_string(e.type));
    j["seq"] = e.seq;
    j["sender"] = e.sender;
    j["sent_sim_time_ms"] = e.sent_sim_time_ms;
    j["payload"] = e.payload;
    std::string line;
    try {
        line = j.dump();
    } catch (const Json::type_error& err) {
        throw ProtocolError(std::string("payload: not serializable: ") + err.what(), "payload");
    }
    line.push_back('\n');
    return line;
}

void validate_payload(MessageType type, const Json& p) {
    using namespace json_field;
    require_object(p, kPayload);
    const std::int64_t v = get_int(p, "v", kPayload);
    if (v != kSchemaVersion) {
        throw ProtocolError("payload.v: unsupported schema version " + std::to_string(v), "v");
    }
    switch (type) {
        case MessageType::report:
            (void)anomaly_report_from_json(p, kPayload);
            break;
        case MessageType::command:
            (void)parse_command(p);
            break;
        case MessageType::ack:
            (void)parse_ack(p);
            break;
        case MessageType::feed_update: {
            const risk::RiskSignal s =
                risk::risk_signal_from_json(require(p, "signal", kPayload), "payload.signal");
            try {
                risk::validate_signal(s);
            } catch (const ValidationError& e) {
                throw ProtocolError(std::string("payload.signal: ") + e.what(), e.field());
            }
            break;
        }
        case MessageType::heartbeat:
            (void)parse_heartbeat(p);
            break;
        case MessageType::profile_deploy:
            (void)parse_profile_deploy(p);
            break;
    }
}

Envelope decode(std::string_view frame) {
    using namespace json_field;
    if (frame.empty() || frame.back() != '\n') {
        throw ProtocolError("frame must end with a newline", "frame", frame.size());
    }
    const std::string_view body = frame.substr(0, frame.size() - 1);
    if (const auto nl = body.find('\n'); nl != std::string_view::npos) {
        throw ProtocolError("frame contains an embedded newline", "frame", nl);
    }

    Json j;
    try {
        j = Json::parse(body);
    } catch (const Json::parse_error& err) {
        throw ProtocolError("parse error at byte " + std::to_string(err.byte) + ": " + err.what(),
                            "frame", err.byte);
    }
    if (!j.is_object()) {
        throw ProtocolError("frame must be a JSON object", "frame", 0);
    }
    for (const auto& [key, value] : j.items()) {
        bool known = false;
        for (const auto k : kEnvelopeKeys) {
            known = known || key == k;
        }
        if (!known) {
            throw ProtocolError("unexpected field " + key, key);
        }
    }

    Envelope e;
    const std::string type_name = get_string(j, "type");
    const auto type = message_type_from_string(type_name);
    if (!type) {
        throw ProtocolError("unknown type " + type_name, "type");
    }
    e.type = *type;
    e.seq = static_cast<std::uint64_t>(get_int_in(j, "seq", 0, INT64_MAX));
    e.sender = get_string(j, "sender");
    if (e.sender.empty()) {
        throw ProtocolError("sender: must not be empty", "sender");
    }
    e.sent_sim_time_ms = get_int_in(j, "sent_sim_time_ms", 0, INT64_MAX);
    e.payload = require(j, "payload");
    validate_payload(e.type, e.payload);
    return e;
}

Envelope make_report(std::string sender, std::uint64_t seq, const AnomalyReport& report) {
    Json p = versioned();
    const Json fields = to_json(report);
    for (const auto& [k, v] : fields.items()) {
        p[k] = v;
    }
    return Envelope{MessageType::report, seq, std::move(sender), report.sim_time_ms, std::move(p)};
}

Envelope make_command(std::string sender, std::uint64_t seq, std::int64_t now_ms,
                      const CommandPayload& cmd) {
    Json p = versioned();
    p["lamppost_id"] = cmd.lamppost_id;
    p["mode"] = cmd.mode ? Json(std::string(to_string(*cmd.mode))) : Json(nullptr);
    p["override"] = cmd.override_cmd;
    p["reason"] = cmd.reason;
    if (cmd.alert_id) {
        p["alert_id"] = *cmd.alert_id;
    }
    return Envelope{MessageType::command, seq, std::move(sender), now_ms, std::move(p)};
}

Envelope make_ack(std::string sender, std::uint64_t seq, std::int64_t now_ms, const AckPayload& ack) {
    Json p = versioned();
    p["ack_of"] = std::string(to_string(ack.ack_of));
    p["ref_seq"] = ack.ref_seq;
    p["ok"] = ack.ok;
    p["detail"] = ack.detail;
    if (ack.profile_version) {
        p["profile_version"] = *ack.profile_version;
    }
    return Envelope{MessageType::ack, seq, std::move(sender), now_ms, std::move(p)};
}

Envelope make_feed_update(std::string sender, std::uint64_t seq, const risk::RiskSignal& signal) {
    Json p = versioned();
    p["signal"] = risk::to_json(signal);
    return Envelope{MessageType::feed_update, seq, std::move(sender), signal.issued_sim_time_ms,
                    std::move(p)};
}

Envelope make_heartbeat(std::string sender, std::uint64_t seq, std::int64_t now_ms,
                        const HeartbeatPayload& hb) {
    Json p = versioned();
    p["role"] = hb.role;
    if (hb.profile_version) {
        p["profile_version"] = *hb.profile_version;
    }
    return Envelope{MessageType::heartbeat, seq, std::move(sender), now_ms, std::move(p)};
}

Envelope make_profile_deploy(std::string sender, std::uint64_t seq, std::int64_t now_ms,
                             const ProfileDeployPayload& deploy) {
    Json p = versioned();
    p["lamppost_id"] = deploy.lamppost_id;
    p["profile"] = to_json(deploy.profile);
    return Envelope{MessageType::profile_deploy, seq, std::move(sender), now_ms, std::move(p)};
}

AnomalyReport report_of(const Envelope& e) {
    expect_type(e, MessageType::report);
    return anomaly_report_from_json(e.payload, kPayload);
}

CommandPayload command_of(const Envelope& e) {
    expect_type(e, MessageType::command);
    return parse_command(e.payload);
}

AckPayload ack_of(const Envelope& e) {
    expect_type(e, MessageType::ack);
    return parse_ack(e.payload);
}

risk::RiskSignal feed_signal_of(const Envelope& e) {
    expect_type(e, MessageType::feed_update);
    return risk::risk_signal_from_json(json_field::require(e.payload, "signal", kPayload),
                                       "payload.signal");
}

HeartbeatPayload heartbeat_of(const Envelope& e) {
    expect_type(e, MessageType::heartbeat);
    return parse_heartbeat(e.payload);
}

ProfileDeployPayload profile_deploy_of(const Envelope& e) {
    expect_type(e, MessageType::profile_deploy);
    return parse_profile_deploy(e.payload);
}

void FrameSplitter::feed(std::string_view bytes) {
    buffer_.append(bytes);
}

std::optional<std::string> FrameSplitter::next() {
    const auto nl = buffer_.find('\n');
    if (nl == std::string::npos) {
        return std::nullopt;
    }
    std::string frame = buffer_.substr(0, nl + 1);
    buffer_.erase(0, nl + 1);
    return frame;
}

SequenceTracker::Observation SequenceTracker::observe(const std::string& sender, std::uint64_t seq) {
    const auto it = last_seen_.find(sender);
    if (it == last_seen_.end()) {
        last_seen_.emplace(sender, seq);
        // The first frame of a sender establishes its baseline.
        if (seq > 1) {
            return {Verdict::gap, seq - 1};
        }
        return {Verdict::fresh, 0};
    }
    if (seq <= it->second) {
        return {Verdict::duplicate, 0};
    }
    const std::uint64_t missing = seq - it->second - 1;
    it->second = seq;
    return {missing == 0 ? Verdict::fresh : Verdict::gap, missing};
}

}  // namespace heimdall::protocol
