#include "heimdall/net/live_run.hpp"

#include <httplib.h>

#include <map>
#include <memory>

#include "heimdall/core/error.hpp"
#include "heimdall/net/clients.hpp"
#include "heimdall/net/tcu_server.hpp"
#include "heimdall/sim/simulator.hpp"

namespace heimdall::net {

namespace {

Json post(httplib::Client& http, const std::string& path, const Json& body, int& status) {
    const auto res = http.Post(path, body.dump(), "application/json");
    if (!res) {
        throw Error("HTTP POST " + path + " failed: " + httplib::to_string(res.error()));
    }
    status = res->status;
    return res->body.empty() ? Json::object() : Json::parse(res->body);
}

}  // namespace

LiveRunResult run_live(const sim::Scenario& scenario) {
    const std::vector<std::string> errors = sim::validate_scenario(scenario);
    if (!errors.empty()) {
        throw ValidationError("invalid scenario: " + errors.front(), "scenario");
    }

    ServerOptions options;
    options.config = scenario.tcu_config();
    options.initial_profile = scenario.profile;
    options.http = Address{"127.0.0.1", 0};
    TcuServer server(std::move(options));
    server.start();
    const Address stream{"127.0.0.1", server.stream_port()};

    std::map<std::string, std::unique_ptr<LluClient>> llus;
    for (const sim::FleetEntry& f : scenario.fleet) {
        LamppostDescriptor d;
        d.lamppost_id = f.lamppost_id;
        d.position = f.position;
        auto agent = std::make_unique<LluAgent>(
            d, scenario.profile, scenario.bounds,
            std::make_unique<ScriptedDetector>(UnitRng::derive_seed(scenario.seed, f.lamppost_id)));
        auto client = std::make_unique<LluClient>(std::move(agent), stream);
        if (!client->hello(0)) {
            throw Error("lamppost " + f.lamppost_id + " was not acknowledged");
        }
        llus.emplace(f.lamppost_id, std::move(client));
    }
    PeerLink feed(stream);

    httplib::Client http("127.0.0.1", server.http_port());
    LiveRunResult result;
    for (const sim::TimelineStep& step : sim::scenario_timeline(scenario)) {
        switch (step.kind) {
            case sim::TimelineStep::Kind::feed:
                if (!feed.request(step.feed)) {
                    throw Error("feed frame at " + std::to_string(step.t_ms) + " not acknowledged");
                }
                break;
            case sim::TimelineStep::Kind::scene: {
                const SceneEvent& e = scenario.scene_events.at(step.lamppost_id)[step.index];
                const auto outcome = llus.at(step.lamppost_id)->scene(e);
                if (outcome.reported) {
                    ++result.reports_emitted;
                    if (!outcome.ack) {
                        ++result.reports_unacknowledged;
                    }
                }
                break;
            }
            case sim::TimelineStep::Kind::deploy: {
                const sim::ScriptedDeployment& d = scenario.deployments[step.index];
                int status = 0;
                const Json reg = post(http, "/api/v1/profiles", to_json(d.profile), status);
                if (status != 201) {
                    throw Error("profile registration failed: " + reg.dump());
                }
                const Json report = post(http, "/api/v1/profiles/" + std::to_string(reg.at("version").get<int>()) + "/deploy",
                                         Json{{"targets", d.targets}, {"sim_time_ms", d.t_ms}}, status);
                if (status != 200) {
                    throw Error("deployment failed: " + report.dump());
                }
                result.deployments_ok += report.at("ok").get<std::uint64_t>();
                break;
            }
            case sim::TimelineStep::Kind::action: {
                const sim::ScriptedAction& a = scenario.operator_actions[step.index];
                Json body{{"action", std::string(tcu::to_string(a.action.kind))}, {"operator", a.operator_id},
                          {"sim_time_ms", a.t_ms}};
                if (a.action.radius_m) {
                    body["radius_m"] = *a.action.radius_m;
                }
                int status = 0;
                post(http, "/api/v1/alerts/" + a.alert_id + "/action", body, status);
                if (status != 200) {
                    ++result.operator_action_errors;
                }
                break;
            }
        }
    }

    for (auto& [_, client] : llus) {
        client->close();
    }
    feed.close();
    result.snapshot = server.snapshot();
    result.audit_text = server.audit_text();
    result.diagnostics = server.diagnostics();
    server.stop();
    return result;
}

}  // namespace heimdall::net
