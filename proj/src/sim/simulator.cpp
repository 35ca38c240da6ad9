#include "heimdall/sim/simulator.hpp"

#include <fstream>
#include <memory>
#include <queue>
#include <tuple>

#include "heimdall/core/error.hpp"
#include "heimdall/feeds/feed_script.hpp"
#include "heimdall/llu/agent.hpp"
#include "heimdall/protocol/audit_log.hpp"
#include "heimdall/protocol/envelope.hpp"
#include "heimdall/registry/model_registry.hpp"
#include "heimdall/tcu/gateway.hpp"
#include "heimdall/tcu/tcu.hpp"

namespace heimdall::sim {

namespace {

using protocol::Envelope;
using protocol::MessageType;

// Ties at one instant resolve in this order, then by insertion.
enum class Phase { expiry = 0, feed = 1, deploy = 2, scene = 3, action = 4 };

struct Pending {
    Phase phase;
    std::uint64_t order;
    TimelineStep step;
};

struct Later {
    bool operator()(const Pending& a, const Pending& b) const {
        return std::tie(a.step.t_ms, a.phase, a.order) > std::tie(b.step.t_ms, b.phase, b.order);
    }
};

Envelope over_the_wire(const Envelope& env) {
    return protocol::decode(protocol::encode(env));
}

class World;

class SimDeployChannel final : public registry::DeployChannel {
public:
    explicit SimDeployChannel(World& world) : world_(world) {}
    bool knows(const std::string& lamppost_id) const override;
    std::optional<protocol::AckPayload> deliver(const std::string& lamppost_id,
                                                const Envelope& deploy) override;

private:
    World& world_;
};

class World {
public:
    World(const Scenario& s, protocol::AuditLog& log)
        : scenario_(s), tcu_(s.tcu_config(), log), gateway_(tcu_) {
        for (const FleetEntry& f : s.fleet) {
            LamppostDescriptor d;
            d.lamppost_id = f.lamppost_id;
            d.position = f.position;
            d.active_profile_version = 1;
            agents_.emplace(f.lamppost_id,
                            std::make_unique<LluAgent>(
                                d, s.profile, s.bounds,
                                std::make_unique<ScriptedDetector>(
                                    UnitRng::derive_seed(s.seed, f.lamppost_id))));
        }
        registry_.register_profile(s.profile, s.bounds);
    }

    void to_tcu(const Envelope& env) {
        for (tcu::Outbound& out : gateway_.handle(over_the_wire(env))) {
            route(out);
        }
    }

    void flush(std::int64_t now_ms) {
        for (tcu::Outbound& out : gateway_.flush_commands(now_ms)) {
            route(out);
        }
    }

    std::optional<Envelope> to_llu(const std::string& lamppost_id, const Envelope& env) {
        return agents_.at(lamppost_id)->on_message(over_the_wire(env));
    }

    bool has_llu(const std::string& lamppost_id) const { return agents_.contains(lamppost_id); }

    void scene(const std::string& lamppost_id, std::size_t index) {
        const SceneEvent& e = scenario_.scene_events.at(lamppost_id)[index];
        ++summary.scene_events;
        const auto report = agents_.at(lamppost_id)->on_scene_event(e);
        if (!report) {
            return;
        }
        ++summary.reports_emitted;
        if (!e.true_positive) {
            ++summary.false_positive_reports;
        }
        to_tcu(*report);
    }

    void action(const ScriptedAction& a) {
        ++summary.operator_actions;
        try {
            tcu_.operator_action(a.alert_id, a.action, a.operator_id, a.t_ms);
        } catch (const Error&) {
            ++summary.operator_action_errors;
        }
        flush(a.t_ms);
    }

    void deploy(const ScriptedDeployment& d) {
        const int version = registry_.register_profile(d.profile, scenario_.bounds);
        SimDeployChannel channel(*this);
        const registry::DeploymentReport report = registry_.deploy(version, d.targets, channel, d.t_ms);
        summary.deployments_ok += report.ok_count();
        summary.deployments_failed += report.targets.size() - report.ok_count();
    }

    void feed(const Envelope& env) {
        if (env.type == MessageType::feed_update) {
            ++summary.feed_updates;
        }
        to_tcu(env);
    }

    tcu::TerritorialControlUnit& tcu() { return tcu_; }

    RunSummary summary;

private:
    void route(const tcu::Outbound& out) {
        if (out.envelope.type == MessageType::command) {
            ++summary.commands_sent;
        }
        const std::string lamppost = tcu::lamppost_of_sender(out.destination);
        if (lamppost.empty() || !agents_.contains(lamppost)) {
            return;
        }
        if (const auto reply = to_llu(lamppost, out.envelope)) {
            to_tcu(*reply);
        }
    }

    const Scenario& scenario_;
    tcu::TerritorialControlUnit tcu_;
    tcu::Gateway gateway_;
    registry::ModelRegistry registry_;
    std::map<std::string, std::unique_ptr<LluAgent>> agents_;
};

bool SimDeployChannel::knows(const std::string& lamppost_id) const {
    return world_.has_llu(lamppost_id);
}

std::optional<protocol::AckPayload> SimDeployChannel::deliver(const std::string& lamppost_id,
                                                              const Envelope& deploy) {
    const auto reply = world_.to_llu(lamppost_id, deploy);
    if (!reply) {
        return std::nullopt;
    }
    world_.to_tcu(*reply);
    return protocol::ack_of(over_the_wire(*reply));
}

void write_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << text;
    if (!out) {
        throw Error("cannot write " + path.string());
    }
}

}  // namespace

Json to_json(const RunSummary& s) {
    Json j = Json::object();
    j["seed"] = s.seed;
    j["duration_ms"] = s.duration_ms;
    j["scene_events"] = s.scene_events;
    j["reports_emitted"] = s.reports_emitted;
    j["reports_ingested"] = s.reports_ingested;
    j["reports_rejected"] = s.reports_rejected;
    j["false_positive_reports"] = s.false_positive_reports;
    Json by_state = Json::object();
    for (const auto& [state, n] : s.alerts_by_state) {
        by_state[state] = n;
    }
    j["alerts_by_state"] = std::move(by_state);
    Json hist = Json::object();
    for (const auto& [fanout, n] : s.fanout_histogram) {
        hist[std::to_string(fanout)] = n;
    }
    j["fanout_histogram"] = std::move(hist);
    j["warnings_issued"] = s.warnings_issued;
    j["commands_sent"] = s.commands_sent;
    j["feed_updates"] = s.feed_updates;
    j["operator_actions"] = s.operator_actions;
    j["operator_action_errors"] = s.operator_action_errors;
    j["deployments_ok"] = s.deployments_ok;
    j["deployments_failed"] = s.deployments_failed;
    j["final_lambda"] = s.final_lambda;
    j["audit_records"] = s.audit_records;
    return j;
}

std::string metrics_csv(const RunSummary& s) {
    std::string out = "metric,value\n";
    const auto row = [&out](const std::string& name, const auto& value) {
        out += name + "," + std::to_string(value) + "\n";
    };
    row("scene_events", s.scene_events);
    row("reports_emitted", s.reports_emitted);
    row("reports_ingested", s.reports_ingested);
    row("reports_rejected", s.reports_rejected);
    row("false_positive_reports", s.false_positive_reports);
    for (const auto& [state, n] : s.alerts_by_state) {
        row("alerts_" + state, n);
    }
    for (const auto& [fanout, n] : s.fanout_histogram) {
        row("fanout_" + std::to_string(fanout), n);
    }
    row("warnings_issued", s.warnings_issued);
    row("commands_sent", s.commands_sent);
    row("feed_updates", s.feed_updates);
    row("operator_actions", s.operator_actions);
    row("operator_action_errors", s.operator_action_errors);
    row("deployments_ok", s.deployments_ok);
    row("deployments_failed", s.deployments_failed);
    row("final_lambda", s.final_lambda);
    row("audit_records", s.audit_records);
    return out;
}

std::string snapshot_text(const Json& snapshot) {
    return snapshot.dump(2) + "\n";
}

std::vector<TimelineStep> scenario_timeline(const Scenario& scenario) {
    using Kind = TimelineStep::Kind;
    std::priority_queue<Pending, std::vector<Pending>, Later> pending;
    std::uint64_t order = 0;
    for (Envelope& env : feeds::feed_timeline(scenario.feed_script, scenario.feed_weights,
                                              "feed:script", scenario.duration_ms)) {
        const Phase phase = env.type == MessageType::heartbeat ? Phase::expiry : Phase::feed;
        TimelineStep step{env.sent_sim_time_ms, Kind::feed, std::move(env), {}, 0};
        pending.push({phase, order++, std::move(step)});
    }
    for (std::size_t i = 0; i < scenario.deployments.size(); ++i) {
        pending.push({Phase::deploy, order++, {scenario.deployments[i].t_ms, Kind::deploy, {}, {}, i}});
    }
    for (const auto& [id, list] : scenario.scene_events) {
        for (std::size_t i = 0; i < list.size(); ++i) {
            pending.push({Phase::scene, order++, {list[i].sim_time_ms, Kind::scene, {}, id, i}});
        }
    }
    for (std::size_t i = 0; i < scenario.operator_actions.size(); ++i) {
        pending.push(
            {Phase::action, order++, {scenario.operator_actions[i].t_ms, Kind::action, {}, {}, i}});
    }
    std::vector<TimelineStep> steps;
    steps.reserve(pending.size());
    while (!pending.empty()) {
        steps.push_back(pending.top().step);
        pending.pop();
    }
    return steps;
}

RunResult run_scenario(const Scenario& scenario, const std::optional<std::filesystem::path>& out_dir) {
    const std::vector<std::string> errors = validate_scenario(scenario);
    if (!errors.empty()) {
        std::string msg = "invalid scenario:";
        for (const std::string& e : errors) {
            msg += "\n  " + e;
        }
        throw ValidationError(msg, "scenario");
    }

    std::unique_ptr<protocol::AuditLog> log;
    if (out_dir) {
        std::filesystem::create_directories(*out_dir);
        log = std::make_unique<protocol::AuditLog>(*out_dir / "audit.hal");
    } else {
        log = std::make_unique<protocol::AuditLog>();
    }

    World world(scenario, *log);

    for (const TimelineStep& step : scenario_timeline(scenario)) {
        switch (step.kind) {
            case TimelineStep::Kind::feed:
                world.feed(step.feed);
                break;
            case TimelineStep::Kind::deploy:
                world.deploy(scenario.deployments[step.index]);
                break;
            case TimelineStep::Kind::scene:
                world.scene(step.lamppost_id, step.index);
                break;
            case TimelineStep::Kind::action:
                world.action(scenario.operator_actions[step.index]);
                break;
        }
    }

    tcu::TerritorialControlUnit& tcu = world.tcu();
    RunSummary summary = world.summary;
    summary.seed = scenario.seed;
    summary.duration_ms = scenario.duration_ms;
    for (const protocol::AuditRecord& r : log->records()) {
        if (r.kind == protocol::AuditKind::ingest) {
            ++summary.reports_ingested;
        } else if (r.kind == protocol::AuditKind::error && r.body.contains("input") &&
                   r.body.at("input") == "ingest") {
            ++summary.reports_rejected;
        }
    }
    for (const auto& [id, alert] : tcu.alerts()) {
        ++summary.alerts_by_state[std::string(to_string(alert.state))];
        ++summary.fanout_histogram[alert.propagated_to.size()];
    }
    summary.warnings_issued = tcu.warnings().size();
    summary.final_lambda = tcu.risk_context().lambda.value();
    summary.audit_records = log->size();

    RunResult result{summary, tcu.snapshot(), log->text()};
    if (out_dir) {
        write_file(*out_dir / "snapshot.json", snapshot_text(result.snapshot));
        write_file(*out_dir / "summary.json", to_json(summary).dump(2) + "\n");
        write_file(*out_dir / "metrics.csv", metrics_csv(summary));
    }
    return result;
}

}  // namespace heimdall::sim
