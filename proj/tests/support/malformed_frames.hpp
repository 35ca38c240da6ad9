#pragma once

#include <string>
#include <vector>

namespace heimdall::testing {

struct MalformedFrame {
    std::string name;
    std::string frame;
    /// Field the ProtocolError must name.
    std::string field;
};

inline const std::string kValidReportPayload =
    R"({"v":1,"report_id":"L1-r000001","lamppost_id":"L1","anomaly":"vehicle_collision","phi":5,)"
    R"("position":{"lat":45.0,"lon":9.0},"sim_time_ms":1000,"confidence":0.9,"metadata":{}})";

inline std::string report_frame(const std::string& payload) {
    return R"({"type":"REPORT","seq":1,"sender":"llu:L1","sent_sim_time_ms":1000,"payload":)" +
           payload + "}\n";
}

inline std::string replace_once(std::string s, const std::string& from, const std::string& to) {
    const auto at = s.find(from);
    if (at != std::string::npos) {
        s.replace(at, from.size(), to);
    }
    return s;
}

inline std::vector<MalformedFrame> malformed_frames() {
    const std::string ok = report_frame(kValidReportPayload);
    return {
        {"no trailing newline", ok.substr(0, ok.size() - 1), "frame"},
        {"embedded newline", replace_once(ok, ",\"seq\"", "\n,\"seq\""), "frame"},
        {"truncated JSON", ok.substr(0, 40) + "\n", "frame"},
        {"not an object", "[1,2,3]\n", "frame"},
        {"unknown type", replace_once(ok, "\"REPORT\"", "\"BOGUS\""), "type"},
        {"missing type", replace_once(ok, "\"type\":\"REPORT\",", ""), "type"},
        {"negative seq", replace_once(ok, "\"seq\":1", "\"seq\":-4"), "seq"},
        {"string seq", replace_once(ok, "\"seq\":1", "\"seq\":\"1\""), "seq"},
        {"empty sender", replace_once(ok, "\"llu:L1\"", "\"\""), "sender"},
        {"missing sent time", replace_once(ok, "\"sent_sim_time_ms\":1000,", ""), "sent_sim_time_ms"},
        {"unknown envelope key", replace_once(ok, "\"seq\":1", "\"seq\":1,\"x\":0"), "x"},
        {"payload not an object", report_frame("[]"), "payload"},
        {"missing schema version", report_frame(replace_once(kValidReportPayload, "\"v\":1,", "")), "v"},
        {"wrong schema version", report_frame(replace_once(kValidReportPayload, "\"v\":1", "\"v\":2")), "v"},
        {"confidence out of range",
         report_frame(replace_once(kValidReportPayload, "\"confidence\":0.9", "\"confidence\":1.5")),
         "confidence"},
        {"negative phi", report_frame(replace_once(kValidReportPayload, "\"phi\":5", "\"phi\":-1")), "phi"},
        {"unknown anomaly",
         report_frame(replace_once(kValidReportPayload, "vehicle_collision", "speeding")), "anomaly"},
        {"latitude out of range",
         report_frame(replace_once(kValidReportPayload, "\"lat\":45.0", "\"lat\":99.0")), "lat"},
        {"missing report id",
         report_frame(replace_once(kValidReportPayload, "\"report_id\":\"L1-r000001\",", "")),
         "report_id"},
        {"metadata not strings",
         report_frame(replace_once(kValidReportPayload, "\"metadata\":{}", "\"metadata\":{\"k\":1}")),
         "metadata"},
        {"command unknown mode",
         R"({"type":"COMMAND","seq":1,"sender":"tcu","sent_sim_time_ms":0,"payload":{"v":1,"lamppost_id":"L1","mode":"disco","override":false,"reason":""}})"
         "\n",
         "mode"},
        {"command null mode without override",
         R"({"type":"COMMAND","seq":1,"sender":"tcu","sent_sim_time_ms":0,"payload":{"v":1,"lamppost_id":"L1","mode":null,"override":false,"reason":""}})"
         "\n",
         "mode"},
        {"ack of unknown type",
         R"({"type":"ACK","seq":1,"sender":"tcu","sent_sim_time_ms":0,"payload":{"v":1,"ack_of":"NOPE","ref_seq":1,"ok":true,"detail":""}})"
         "\n",
         "ack_of"},
        {"ack ok not boolean",
         R"({"type":"ACK","seq":1,"sender":"tcu","sent_sim_time_ms":0,"payload":{"v":1,"ack_of":"REPORT","ref_seq":1,"ok":"yes","detail":""}})"
         "\n",
         "ok"},
        {"feed severity out of range",
         R"({"type":"FEED_UPDATE","seq":1,"sender":"feed:weather","sent_sim_time_ms":0,"payload":{"v":1,"signal":{"source_id":"weather","severity":2.0,"weight":0.7,"issued_sim_time_ms":0,"ttl_ms":100,"description":""}}})"
         "\n",
         "severity"},
        {"feed ttl zero",
         R"({"type":"FEED_UPDATE","seq":1,"sender":"feed:weather","sent_sim_time_ms":0,"payload":{"v":1,"signal":{"source_id":"weather","severity":0.5,"weight":0.7,"issued_sim_time_ms":0,"ttl_ms":0,"description":""}}})"
         "\n",
         "ttl_ms"},
        {"heartbeat missing role",
         R"({"type":"HEARTBEAT","seq":1,"sender":"llu:L1","sent_sim_time_ms":0,"payload":{"v":1}})"
         "\n",
         "role"},
        {"deploy missing profile",
         R"({"type":"PROFILE_DEPLOY","seq":1,"sender":"registry","sent_sim_time_ms":0,"payload":{"v":1,"lamppost_id":"L1"}})"
         "\n",
         "profile"},
    };
}

}  // namespace heimdall::testing
