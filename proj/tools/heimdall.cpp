#include <httplib.h>
#include <signal.h>

#include <CLI11.hpp>
#include <algorithm>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <thread>

#include "heimdall/core/error.hpp"
#include "heimdall/core/json.hpp"
#include "heimdall/core/profile.hpp"
#include "heimdall/feeds/feed_script.hpp"
#include "heimdall/net/clients.hpp"
#include "heimdall/net/live_run.hpp"
#include "heimdall/net/tcu_server.hpp"
#include "heimdall/protocol/audit_log.hpp"
#include "heimdall/registry/model_registry.hpp"
#include "heimdall/sim/scenario.hpp"
#include "heimdall/sim/simulator.hpp"
#include "heimdall/tcu/config.hpp"
#include "heimdall/tcu/tcu.hpp"

namespace fs = std::filesystem;
using namespace heimdall;

namespace {

constexpr int kOk = 0;
constexpr int kInvalid = 1;
constexpr int kRuntime = 2;

void print_json(const Json& j) {
    std::cout << j.dump(2) << "\n" << std::flush;
}

std::string read_text(const fs::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) {
        throw ConfigError("cannot open " + file.string());
    }
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_text(const fs::path& file, const std::string& text) {
    std::ofstream out(file, std::ios::binary | std::ios::trunc);
    out << text;
    if (!out) {
        throw Error("cannot write " + file.string());
    }
}

std::vector<std::string> split_ids(const std::string& csv) {
    std::vector<std::string> ids;
    std::size_t start = 0;
    while (start <= csv.size()) {
        const std::size_t comma = std::min(csv.find(',', start), csv.size());
        if (comma > start) {
            ids.push_back(csv.substr(start, comma - start));
        }
        start = comma + 1;
    }
    return ids;
}

/// HTTP call against a running `tcu serve`. Non-2xx answers raise the
/// server's error message; 400-class errors count as invalid input.
Json http_call(const std::string& address, const std::string& method, const std::string& path,
               const Json& body) {
    const net::Address a = net::parse_address(address);
    httplib::Client client(a.host, a.port);
    client.set_read_timeout(30, 0);
    const auto res = method == "GET" ? client.Get(path)
                                     : client.Post(path, body.dump(), "application/json");
    if (!res) {
        throw Error("cannot reach " + address + ": " + httplib::to_string(res.error()));
    }
    const Json reply = res->body.empty() ? Json::object() : Json::parse(res->body);
    if (res->status >= 400 && res->status < 500) {
        throw ValidationError("HTTP " + std::to_string(res->status) + ": " +
                                  reply.value("error", res->body),
                              "request");
    }
    if (res->status >= 300) {
        throw Error("HTTP " + std::to_string(res->status) + ": " + reply.value("error", res->body));
    }
    return reply;
}

/// Blocks SIGINT and SIGTERM in every thread and returns once one arrives.
class SignalWaiter {
public:
    SignalWaiter() {
        sigemptyset(&set_);
        sigaddset(&set_, SIGINT);
        sigaddset(&set_, SIGTERM);
        pthread_sigmask(SIG_BLOCK, &set_, nullptr);
    }
    int wait() {
        int sig = 0;
        sigwait(&set_, &sig);
        return sig;
    }

private:
    sigset_t set_{};
};

struct SimRunArgs {
    std::string scenario;
    std::string out;
    std::optional<std::uint64_t> seed;
};

int sim_run(const SimRunArgs& args) {
    sim::Scenario s = sim::load_scenario(args.scenario);
    if (args.seed) {
        s.seed = *args.seed;
    }
    const sim::RunResult r = sim::run_scenario(s, fs::path(args.out));
    print_json(to_json(r.summary));
    return kOk;
}

int sim_validate(const std::string& file) {
    const sim::Scenario s = sim::load_scenario(file);
    const std::vector<std::string> errors = sim::validate_scenario(s);
    if (!errors.empty()) {
        for (const std::string& e : errors) {
            std::cerr << "error: " << e << "\n";
        }
        return kInvalid;
    }
    std::size_t events = 0;
    for (const auto& [_, list] : s.scene_events) {
        events += list.size();
    }
    std::cout << "ok: " << s.fleet.size() << " lampposts, " << events << " scene events, "
              << s.feed_script.entries.size() << " feed entries, " << s.operator_actions.size()
              << " operator actions, " << s.deployments.size() << " deployments\n";
    return kOk;
}

int sim_compare(const std::string& file) {
    const sim::Scenario s = sim::load_scenario(file);
    const sim::RunResult in_process = sim::run_scenario(s);
    const net::LiveRunResult live = net::run_live(s);
    const bool alerts = live.snapshot.at("alerts") == in_process.snapshot.at("alerts");
    const bool snapshot = live.snapshot == in_process.snapshot;
    const bool audit = live.audit_text == in_process.audit_text;
    print_json(Json{{"alerts_equal", alerts},
                    {"snapshot_equal", snapshot},
                    {"audit_equal", audit},
                    {"alerts", in_process.snapshot.at("alerts").size()},
                    {"audit_records", in_process.summary.audit_records}});
    return alerts && snapshot && audit ? kOk : kRuntime;
}

struct ServeArgs {
    std::string config;
    std::string listen = "127.0.0.1:7400";
    std::string http = "127.0.0.1:8080";
    std::string audit;
    std::string registry;
    std::string snapshot;
    bool quiet = false;
};

int tcu_serve(const ServeArgs& args) {
    const Json doc = read_json_file(args.config, "config");
    net::ServerOptions options;
    options.config = tcu::tcu_config_from_json(doc, fs::path(args.config).parent_path());
    if (!args.audit.empty()) {
        options.config.audit_log_path = args.audit;
    }
    if (!args.registry.empty()) {
        options.config.registry_dir = args.registry;
    }
    options.config.validate();
    options.initial_profile = sim::document_profile(doc, tcu::initial_profile(options.config));
    validate_profile(options.initial_profile, options.config.bounds);
    options.listen = net::parse_address(args.listen);
    if (args.http != "off") {
        options.http = net::parse_address(args.http);
    }
    if (!args.quiet) {
        options.log = [](const std::string& line) { std::cerr << "tcu: " << line << "\n"; };
    }

    SignalWaiter signals;
    net::TcuServer server(std::move(options));
    server.start();
    std::cout << "stream " << net::parse_address(args.listen).host << ":" << server.stream_port() << "\n";
    if (args.http != "off") {
        std::cout << "http " << net::parse_address(args.http).host << ":" << server.http_port() << "\n";
    }
    std::cout << std::flush;
    signals.wait();
    server.stop();
    if (!args.snapshot.empty()) {
        write_text(args.snapshot, sim::snapshot_text(server.snapshot()));
    }
    return kOk;
}

struct LluArgs {
    std::string id;
    std::string connect;
    std::string events;
    std::string scenario;
    std::string profile;
    std::optional<double> lat;
    std::optional<double> lon;
    std::optional<std::uint64_t> seed;
    int linger_ms = 200;
};

int llu_run(const LluArgs& args) {
    LamppostDescriptor d;
    d.lamppost_id = args.id;
    DetectorProfile profile = default_detector_profile();
    CriticalityBounds bounds(5, 10);
    std::uint64_t seed = 0;
    std::vector<SceneEvent> events;
    bool positioned = false;

    if (!args.scenario.empty()) {
        const sim::Scenario s = sim::load_scenario(args.scenario);
        const auto it = std::find_if(s.fleet.begin(), s.fleet.end(),
                                     [&](const sim::FleetEntry& f) { return f.lamppost_id == args.id; });
        if (it == s.fleet.end()) {
            throw ValidationError("lamppost " + args.id + " is not in " + args.scenario, "id");
        }
        d.position = it->position;
        positioned = true;
        profile = s.profile;
        bounds = s.bounds;
        seed = s.seed;
        if (const auto ev = s.scene_events.find(args.id); ev != s.scene_events.end()) {
            events = ev->second;
        }
    }
    if (args.lat || args.lon) {
        if (!args.lat || !args.lon) {
            throw ValidationError("--lat and --lon go together", "position");
        }
        d.position = GeoPoint::make(*args.lat, *args.lon);
        positioned = true;
    }
    if (!positioned) {
        throw ValidationError("a position is required: --scenario or --lat/--lon", "position");
    }
    if (!args.profile.empty()) {
        profile = load_detector_profile(args.profile);
    }
    validate_profile(profile, bounds);
    if (args.seed) {
        seed = *args.seed;
    }
    if (!args.events.empty()) {
        const Json list = read_json_file(args.events, "events");
        if (!list.is_array()) {
            throw ValidationError("events file must hold a JSON array", "events");
        }
        events.clear();
        for (std::size_t i = 0; i < list.size(); ++i) {
            events.push_back(scene_event_from_json(list[i], "events[" + std::to_string(i) + "]"));
        }
    }
    std::stable_sort(events.begin(), events.end(),
                     [](const SceneEvent& a, const SceneEvent& b) { return a.sim_time_ms < b.sim_time_ms; });

    auto agent = std::make_unique<LluAgent>(d, profile, bounds,
                                            std::make_unique<ScriptedDetector>(UnitRng::derive_seed(seed, args.id)));
    net::LluClient client(std::move(agent), net::parse_address(args.connect));
    if (!client.hello(events.empty() ? 0 : events.front().sim_time_ms)) {
        throw Error("TCU did not acknowledge lamppost " + args.id);
    }
    std::uint64_t acked = 0;
    std::uint64_t rejected = 0;
    for (const SceneEvent& e : events) {
        const auto outcome = client.scene(e);
        if (outcome.reported && !outcome.ack) {
            throw Error("report at " + std::to_string(e.sim_time_ms) + " was not acknowledged");
        }
        if (outcome.ack) {
            ++(outcome.ack->ok ? acked : rejected);
        }
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(args.linger_ms));
    const LamppostDescriptor final = client.descriptor();
    client.close();
    print_json(Json{{"lamppost_id", args.id},
                    {"scene_events", events.size()},
                    {"reports_emitted", client.reports_emitted()},
                    {"reports_acknowledged", acked},
                    {"reports_rejected", rejected},
                    {"commands_received", client.commands_received()},
                    {"signalling", to_json(final.signalling)},
                    {"active_profile_version", final.active_profile_version}});
    return kOk;
}

struct FeedArgs {
    std::string script;
    std::string connect;
    std::string sender = "feed:script";
    std::string config;
    std::optional<std::int64_t> horizon_ms;
};

int feed_run(const FeedArgs& args) {
    const feeds::FeedScript script = feeds::parse_feed_script(read_text(args.script));
    const std::map<std::string, double> weights =
        args.config.empty() ? risk::default_feed_weights() : tcu::load_tcu_config(args.config).feed_weights;
    const std::vector<protocol::Envelope> frames =
        feeds::feed_timeline(script, weights, args.sender, args.horizon_ms);
    net::PeerLink link(net::parse_address(args.connect));
    std::uint64_t updates = 0;
    std::uint64_t heartbeats = 0;
    for (const protocol::Envelope& env : frames) {
        const auto ack = link.request(env);
        if (!ack) {
            throw Error("frame " + std::to_string(env.seq) + " was not acknowledged");
        }
        ++(env.type == protocol::MessageType::feed_update ? updates : heartbeats);
    }
    link.close();
    print_json(Json{{"sender", args.sender}, {"feed_updates", updates}, {"expiry_heartbeats", heartbeats}});
    return kOk;
}

int profile_register(const std::string& file, const std::string& registry_dir, const std::string& http) {
    const DetectorProfile profile = load_detector_profile(file);
    if (!http.empty()) {
        print_json(http_call(http, "POST", "/api/v1/profiles", to_json(profile)));
        return kOk;
    }
    if (registry_dir.empty()) {
        throw ValidationError("profile register needs --registry <dir> or --http <addr>", "registry");
    }
    registry::ModelRegistry reg(registry_dir);
    print_json(Json{{"version", reg.register_profile(profile)}});
    return kOk;
}

int profile_deploy(int version, const std::string& targets, const std::string& http) {
    const Json report = http_call(http, "POST", "/api/v1/profiles/" + std::to_string(version) + "/deploy",
                                  Json{{"targets", split_ids(targets)}});
    print_json(report);
    return report.at("ok").get<std::size_t>() == report.at("targets").size() ? kOk : kRuntime;
}

int audit_replay(const std::string& log, const std::string& snapshot_out) {
    const protocol::AuditReplay parsed = protocol::replay_audit_file(log);
    if (parsed.warning) {
        std::cerr << "warning: " << *parsed.warning << "\n";
    }
    const tcu::ReplayedTcu replayed = tcu::replay_tcu(parsed.records);
    const Json snap = replayed.tcu->snapshot();
    if (!snapshot_out.empty()) {
        write_text(snapshot_out, sim::snapshot_text(snap));
    }
    Json out{{"records", parsed.records.size()},
             {"log_identical", replayed.log_identical},
             {"alerts", snap.at("alerts").size()},
             {"lambda", snap.at("risk").at("lambda")}};
    if (parsed.warning) {
        out["warning"] = *parsed.warning;
    }
    if (replayed.divergence) {
        out["divergence"] = *replayed.divergence;
    }
    print_json(out);
    return replayed.log_identical ? kOk : kInvalid;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"heimdall: lamppost anomaly reporting, territorial control and simulation"};
    app.require_subcommand(1);
    std::function<int()> action;

    auto* sim = app.add_subcommand("sim", "Scenario simulation")->require_subcommand(1);
    SimRunArgs run_args;
    auto* run = sim->add_subcommand("run", "Run a scenario on the simulation clock");
    run->add_option("scenario", run_args.scenario, "Scenario file")->required()->check(CLI::ExistingFile);
    run->add_option("--out", run_args.out, "Output directory")->required();
    run->add_option("--seed", run_args.seed, "Override the scenario seed");
    run->callback([&] { action = [&] { return sim_run(run_args); }; });

    std::string validate_file;
    auto* validate = sim->add_subcommand("validate", "Check a scenario file");
    validate->add_option("scenario", validate_file, "Scenario file")->required()->check(CLI::ExistingFile);
    validate->callback([&] { action = [&] { return sim_validate(validate_file); }; });

    std::string compare_file;
    auto* compare = sim->add_subcommand("compare", "Run a scenario in process and over loopback TCP/HTTP and compare");
    compare->add_option("scenario", compare_file, "Scenario file")->required()->check(CLI::ExistingFile);
    compare->callback([&] { action = [&] { return sim_compare(compare_file); }; });

    auto* tcu_cmd = app.add_subcommand("tcu", "Territorial control unit")->require_subcommand(1);
    ServeArgs serve_args;
    auto* serve = tcu_cmd->add_subcommand("serve", "Serve LLUs and feeds over NDJSON and operators over HTTP");
    serve->add_option("--config", serve_args.config, "TCU config (or scenario) file")->required()->check(CLI::ExistingFile);
    serve->add_option("--listen", serve_args.listen, "NDJSON stream address")->capture_default_str();
    serve->add_option("--http", serve_args.http, "HTTP API address, or 'off'")->capture_default_str();
    serve->add_option("--audit", serve_args.audit, "Audit log path (overrides the config)");
    serve->add_option("--registry", serve_args.registry, "Profile registry directory");
    serve->add_option("--snapshot", serve_args.snapshot, "Write the final snapshot here on shutdown");
    serve->add_flag("--quiet", serve_args.quiet, "Do not log protocol diagnostics");
    serve->callback([&] { action = [&] { return tcu_serve(serve_args); }; });

    auto* llu = app.add_subcommand("llu", "Lamppost local unit")->require_subcommand(1);
    LluArgs llu_args;
    auto* llu_run_cmd = llu->add_subcommand("run", "Replay scene events and report to a TCU");
    llu_run_cmd->add_option("--id", llu_args.id, "Lamppost id")->required();
    llu_run_cmd->add_option("--connect", llu_args.connect, "TCU stream address")->required();
    llu_run_cmd->add_option("--events", llu_args.events, "JSON array of scene events")->check(CLI::ExistingFile);
    llu_run_cmd->add_option("--scenario", llu_args.scenario, "Take position, profile, seed and events from a scenario")
        ->check(CLI::ExistingFile);
    llu_run_cmd->add_option("--profile", llu_args.profile, "Detector profile file")->check(CLI::ExistingFile);
    llu_run_cmd->add_option("--lat", llu_args.lat, "Latitude");
    llu_run_cmd->add_option("--lon", llu_args.lon, "Longitude");
    llu_run_cmd->add_option("--seed", llu_args.seed, "Detector seed");
    llu_run_cmd->add_option("--linger-ms", llu_args.linger_ms, "Stay connected this long after the last event")
        ->capture_default_str();
    llu_run_cmd->callback([&] { action = [&] { return llu_run(llu_args); }; });

    auto* feed = app.add_subcommand("feed", "External risk feed")->require_subcommand(1);
    FeedArgs feed_args;
    auto* feed_run_cmd = feed->add_subcommand("run", "Send a feed script to a TCU");
    feed_run_cmd->add_option("--script", feed_args.script, "NDJSON feed script")->required()->check(CLI::ExistingFile);
    feed_run_cmd->add_option("--connect", feed_args.connect, "TCU stream address")->required();
    feed_run_cmd->add_option("--sender", feed_args.sender, "Sender identity")->capture_default_str();
    feed_run_cmd->add_option("--config", feed_args.config, "TCU config holding feed_weights")->check(CLI::ExistingFile);
    feed_run_cmd->add_option("--horizon-ms", feed_args.horizon_ms, "Send no expiry heartbeat after this time");
    feed_run_cmd->callback([&] { action = [&] { return feed_run(feed_args); }; });

    auto* profile = app.add_subcommand("profile", "Detector profile registry")->require_subcommand(1);
    std::string profile_file;
    std::string registry_dir;
    std::string profile_http;
    auto* reg = profile->add_subcommand("register", "Register a profile and print its version");
    reg->add_option("file", profile_file, "Profile file")->required()->check(CLI::ExistingFile);
    reg->add_option("--registry", registry_dir, "Registry directory");
    reg->add_option("--http", profile_http, "Register with a running TCU instead");
    reg->callback([&] { action = [&] { return profile_register(profile_file, registry_dir, profile_http); }; });

    int deploy_version = 0;
    std::string deploy_targets;
    auto* deploy = profile->add_subcommand("deploy", "Deploy a registered version to lampposts");
    deploy->add_option("--version", deploy_version, "Profile version")->required()->check(CLI::PositiveNumber);
    deploy->add_option("--targets", deploy_targets, "Comma-separated lamppost ids")->required();
    deploy->add_option("--http", profile_http, "TCU HTTP address")->required();
    deploy->callback([&] { action = [&] { return profile_deploy(deploy_version, deploy_targets, profile_http); }; });

    auto* audit = app.add_subcommand("audit", "Audit log tools")->require_subcommand(1);
    std::string log_file;
    std::string replay_snapshot;
    auto* replay = audit->add_subcommand("replay", "Rebuild TCU state from a log and verify it");
    replay->add_option("log", log_file, "Audit log")->required()->check(CLI::ExistingFile);
    replay->add_option("--snapshot", replay_snapshot, "Write the rebuilt snapshot here");
    replay->callback([&] { action = [&] { return audit_replay(log_file, replay_snapshot); }; });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kOk : kInvalid;
    }

    try {
        return action();
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kInvalid;
    } catch (const ProtocolError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kInvalid;
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kInvalid;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kRuntime;
    }
}
