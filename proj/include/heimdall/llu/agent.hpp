#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "heimdall/core/json.hpp"
#include "heimdall/core/profile.hpp"
#include "heimdall/core/types.hpp"
#include "heimdall/llu/detector.hpp"
#include "heimdall/llu/signalling.hpp"
#include "heimdall/protocol/envelope.hpp"

namespace heimdall {

struct LamppostDescriptor {
    std::string lamppost_id;
    GeoPoint position;
    SignallingState signalling;
    int active_profile_version = 1;

    bool operator==(const LamppostDescriptor&) const = default;
};

Json to_json(const LamppostDescriptor& d);
/// Reads id ("id" or "lamppost_id"), lat/lon (flat or under "position").
/// Signalling starts off; profile version defaults to 1.
LamppostDescriptor lamppost_from_json(const Json& j, std::string_view path = {});

/// Wire identity of a lamppost's agent.
std::string llu_sender(const std::string& lamppost_id);

/// Report for one detection. phi comes from the profile table; metadata
/// carries profile_version, clip_ref and the anomaly kind.
AnomalyReport build_report(const Detection& det, const LamppostDescriptor& lamppost,
                           const DetectorProfile& profile, std::int64_t now_ms,
                           std::string report_id);

/// Simulated Lamppost Local Unit. Sequential; talks to the TCU only through
/// envelopes.
class LluAgent {
public:
    LluAgent(LamppostDescriptor descriptor, DetectorProfile profile, CriticalityBounds bounds,
             std::unique_ptr<Detector> detector);

    /// Runs the detector; on a detection, updates local signalling from phi
    /// and returns the REPORT envelope.
    std::optional<protocol::Envelope> on_scene_event(const SceneEvent& event);

    /// Handles COMMAND and PROFILE_DEPLOY; returns the ACK to send back.
    /// Other types are ignored.
    std::optional<protocol::Envelope> on_message(const protocol::Envelope& env);

    protocol::Envelope heartbeat(std::int64_t now_ms);

    const LamppostDescriptor& descriptor() const noexcept { return descriptor_; }
    const DetectorProfile& profile() const noexcept { return profile_; }
    const std::string& sender() const noexcept { return sender_; }
    std::uint64_t reports_emitted() const noexcept { return reports_emitted_; }

private:
    std::uint64_t next_seq() { return ++seq_; }

    LamppostDescriptor descriptor_;
    DetectorProfile profile_;
    CriticalityBounds bounds_;
    std::unique_ptr<Detector> detector_;
    std::string sender_;
    std::uint64_t seq_ = 0;
    std::uint64_t reports_emitted_ = 0;
};

}  // namespace heimdall
