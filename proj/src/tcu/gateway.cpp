#include "heimdall/tcu/gateway.hpp"

#include <algorithm>

#include "heimdall/core/error.hpp"

namespace heimdall::tcu {

using protocol::Envelope;
using protocol::MessageType;

std::string lamppost_of_sender(const std::string& sender) {
    constexpr std::string_view prefix = "llu:";
    if (sender.size() > prefix.size() && sender.compare(0, prefix.size(), prefix) == 0) {
        return sender.substr(prefix.size());
    }
    return {};
}

Gateway::Gateway(TerritorialControlUnit& tcu, std::string identity)
    : tcu_(tcu), identity_(std::move(identity)) {}

Envelope Gateway::ack(const Envelope& in, bool ok, std::string detail) {
    return protocol::make_ack(identity_, ++seq_, std::max(in.sent_sim_time_ms, tcu_.clock_ms()),
                              {in.type, in.seq, ok, std::move(detail), std::nullopt});
}

std::vector<Outbound> Gateway::flush_commands(std::int64_t now_ms) {
    std::vector<Outbound> out;
    for (protocol::CommandPayload& cmd : tcu_.drain_commands()) {
        std::string dest = llu_sender(cmd.lamppost_id);
        out.push_back({std::move(dest), protocol::make_command(identity_, ++seq_, now_ms, cmd)});
    }
    return out;
}

std::vector<Outbound> Gateway::handle(const Envelope& in) {
    std::vector<Outbound> out;
    last_heard_[in.sender] = in.sent_sim_time_ms;

    const auto seen = tracker_.observe(in.sender, in.seq);
    if (seen.verdict == protocol::SequenceTracker::Verdict::duplicate) {
        ++duplicates_;
        if (in.type != MessageType::ack) {
            out.push_back({in.sender, ack(in, true, "duplicate")});
        }
        return out;
    }
    if (seen.verdict == protocol::SequenceTracker::Verdict::gap) {
        ++gaps_;
        diagnostics_.push_back("seq gap from " + in.sender + ": " + std::to_string(seen.missing) +
                               " frame(s) missing before seq " + std::to_string(in.seq));
    }

    switch (in.type) {
        case MessageType::report: {
            const AnomalyReport report = protocol::report_of(in);
            if (lamppost_of_sender(in.sender) != report.lamppost_id) {
                diagnostics_.push_back("report " + report.report_id + " from " + in.sender +
                                       " names lamppost " + report.lamppost_id);
            }
            const IngestOutcome outcome = tcu_.ingest_report(report);
            const bool ok = outcome.status != IngestOutcome::Status::rejected;
            out.push_back(
                {in.sender, ack(in, ok, ok ? outcome.alert->alert_id : outcome.reason)});
            break;
        }
        case MessageType::feed_update:
            tcu_.on_feed_update(protocol::feed_signal_of(in), in.sent_sim_time_ms);
            out.push_back({in.sender, ack(in, true, "")});
            break;
        case MessageType::heartbeat:
            tcu_.advance_to(in.sent_sim_time_ms);
            out.push_back({in.sender, ack(in, true, "")});
            break;
        case MessageType::ack: {
            const protocol::AckPayload a = protocol::ack_of(in);
            if (a.ack_of == MessageType::profile_deploy) {
                const std::string lamppost = lamppost_of_sender(in.sender);
                if (a.ok && a.profile_version && tcu_.fleet().contains(lamppost)) {
                    tcu_.record_profile_ack(lamppost, *a.profile_version, in.sent_sim_time_ms);
                }
                if (on_profile_ack_) {
                    on_profile_ack_(lamppost, a);
                }
            }
            break;
        }
        case MessageType::command:
        case MessageType::profile_deploy:
            diagnostics_.push_back("unexpected " + std::string(protocol::to_string(in.type)) +
                                   " from " + in.sender);
            break;
    }

    for (Outbound& o : flush_commands(std::max(in.sent_sim_time_ms, tcu_.clock_ms()))) {
        out.push_back(std::move(o));
    }
    return out;
}

}  // namespace heimdall::tcu
