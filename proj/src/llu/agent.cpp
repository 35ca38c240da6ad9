#include "heimdall/llu/agent.hpp"

#include <cstdio>

#include "heimdall/core/criticality.hpp"
#include "heimdall/core/error.hpp"

namespace heimdall {

Json to_json(const LamppostDescriptor& d) {
    Json j = Json::object();
    j["lamppost_id"] = d.lamppost_id;
    j["position"] = to_json(d.position);
    j["signalling"] = to_json(d.signalling);
    j["active_profile_version"] = d.active_profile_version;
    return j;
}

LamppostDescriptor lamppost_from_json(const Json& j, std::string_view path) {
    using namespace json_field;
    require_object(j, path);
    LamppostDescriptor d;
    d.lamppost_id = has(j, "id") ? get_string(j, "id", path) : get_string(j, "lamppost_id", path);
    if (d.lamppost_id.empty()) {
        throw ProtocolError("lamppost id must not be empty", "id");
    }
    if (has(j, "position")) {
        const std::string sub = path.empty() ? "position" : std::string(path) + ".position";
        d.position = geo_point_from_json(j.at("position"), sub);
    } else {
        d.position = geo_point_from_json(j, path);
    }
    if (has(j, "active_profile_version")) {
        d.active_profile_version =
            static_cast<int>(get_int_in(j, "active_profile_version", 1, INT32_MAX, path));
    }
    return d;
}

std::string llu_sender(const std::string& lamppost_id) {
    return "llu:" + lamppost_id;
}

AnomalyReport build_report(const Detection& det, const LamppostDescriptor& lamppost,
                           const DetectorProfile& profile, std::int64_t now_ms,
                           std::string report_id) {
    AnomalyReport r;
    r.report_id = std::move(report_id);
    r.lamppost_id = lamppost.lamppost_id;
    r.anomaly = det.anomaly;
    r.phi = base_criticality(det.anomaly, profile);
    r.position = lamppost.position;
    r.sim_time_ms = now_ms;
    r.confidence = det.confidence;
    r.metadata["profile_version"] = std::to_string(profile.version);
    r.metadata["clip_ref"] = "clip://" + lamppost.lamppost_id + "/" + std::to_string(now_ms) + "/" +
                             r.report_id;
    r.metadata["anomaly_kind"] = std::string(to_string(kind(det.anomaly)));
    return r;
}

LluAgent::LluAgent(LamppostDescriptor descriptor, DetectorProfile profile, CriticalityBounds bounds,
                   std::unique_ptr<Detector> detector)
    : descriptor_(std::move(descriptor)),
      profile_(std::move(profile)),
      bounds_(bounds),
      detector_(std::move(detector)),
      sender_(llu_sender(descriptor_.lamppost_id)) {
    validate_profile(profile_, bounds_);
    descriptor_.active_profile_version = profile_.version;
}

std::optional<protocol::Envelope> LluAgent::on_scene_event(const SceneEvent& event) {
    validate_scene_event(event);
    const auto det = detector_->run(event, profile_);
    if (!det) {
        return std::nullopt;
    }
    ++reports_emitted_;
    char id[32];
    std::snprintf(id, sizeof id, "r%06llu", static_cast<unsigned long long>(reports_emitted_));
    AnomalyReport report = build_report(*det, descriptor_, profile_, event.sim_time_ms,
                                        descriptor_.lamppost_id + "-" + id);
    descriptor_.signalling =
        apply_signalling(descriptor_.signalling, report.phi, bounds_, event.sim_time_ms);
    return protocol::make_report(sender_, next_seq(), report);
}

std::optional<protocol::Envelope> LluAgent::on_message(const protocol::Envelope& env) {
    using protocol::MessageType;
    const std::int64_t now = env.sent_sim_time_ms;
    if (env.type == MessageType::command) {
        const protocol::CommandPayload cmd = protocol::command_of(env);
        protocol::AckPayload ack{MessageType::command, env.seq, true, "", std::nullopt};
        if (cmd.lamppost_id != descriptor_.lamppost_id) {
            ack.ok = false;
            ack.detail = "command addressed to " + cmd.lamppost_id;
        } else if (cmd.override_cmd) {
            descriptor_.signalling = apply_override(descriptor_.signalling, cmd.mode, now);
        } else if (cmd.mode) {
            descriptor_.signalling = apply_mode(descriptor_.signalling, *cmd.mode, now);
        }
        ack.detail = ack.ok ? std::string(to_string(descriptor_.signalling.mode)) : ack.detail;
        return protocol::make_ack(sender_, next_seq(), now, ack);
    }
    if (env.type == MessageType::profile_deploy) {
        const protocol::ProfileDeployPayload deploy = protocol::profile_deploy_of(env);
        protocol::AckPayload ack{MessageType::profile_deploy, env.seq, true, "", std::nullopt};
        if (deploy.lamppost_id != descriptor_.lamppost_id) {
            ack.ok = false;
            ack.detail = "deploy addressed to " + deploy.lamppost_id;
        } else {
            try {
                validate_profile(deploy.profile, bounds_);
                profile_ = deploy.profile;
                descriptor_.active_profile_version = profile_.version;
                ack.profile_version = profile_.version;
                ack.detail = "active";
            } catch (const ValidationError& e) {
                ack.ok = false;
                ack.detail = e.what();
            }
        }
        return protocol::make_ack(sender_, next_seq(), now, ack);
    }
    return std::nullopt;
}

protocol::Envelope LluAgent::heartbeat(std::int64_t now_ms) {
    return protocol::make_heartbeat(sender_, next_seq(), now_ms,
                                    {"llu", descriptor_.active_profile_version});
}

}  // namespace heimdall
