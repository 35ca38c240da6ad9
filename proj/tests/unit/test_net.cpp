#include <httplib.h>

#include <atomic>
#include <chrono>
#include <sstream>
#include <thread>

#include "doctest.h"
#include "heimdall/core/error.hpp"
#include "heimdall/net/clients.hpp"
#include "heimdall/net/event_hub.hpp"
#include "heimdall/net/live_run.hpp"
#include "heimdall/net/tcu_server.hpp"
#include "heimdall/sim/scenario.hpp"
#include "heimdall/sim/simulator.hpp"
#include "test_support.hpp"

using namespace heimdall;
using namespace heimdall::net;
using namespace std::chrono_literals;

namespace {

template <class Pred>
bool eventually(Pred pred, std::chrono::milliseconds timeout = 3000ms) {
    const auto deadline = std::chrono::steady_clock::now() + timeout;
    while (std::chrono::steady_clock::now() < deadline) {
        if (pred()) {
            return true;
        }
        std::this_thread::sleep_for(5ms);
    }
    return pred();
}

tcu::TcuConfig line_fleet() {
    tcu::TcuConfig c = tcu::TcuConfig::defaults();
    const GeoPoint o = GeoPoint::make(45.0, 9.0);
    c.propagation_radius_m = 150.0;
    c.fleet = {testing::lamppost("L0", o.lat, o.lon),
               testing::lamppost("L1", testing::north_of(o, 100.0).lat, o.lon),
               testing::lamppost("L2", testing::north_of(o, 200.0).lat, o.lon)};
    return c;
}

struct Harness {
    Harness() : server(options()) {
        server.start();
        http = std::make_unique<httplib::Client>("127.0.0.1", server.http_port());
        http->set_read_timeout(5, 0);
    }

    static ServerOptions options() {
        ServerOptions o;
        o.config = line_fleet();
        o.http = Address{"127.0.0.1", 0};
        o.deploy_timeout = 1000ms;
        return o;
    }

    Address stream() const { return {"127.0.0.1", server.stream_port()}; }

    std::unique_ptr<LluClient> llu(const std::string& id) {
        const Json snap = server.snapshot();
        for (const Json& d : snap.at("lampposts")) {
            if (d.at("lamppost_id") == id) {
                auto agent = std::make_unique<LluAgent>(lamppost_from_json(d), default_detector_profile(),
                                                        CriticalityBounds(5, 10),
                                                        std::make_unique<ScriptedDetector>(1));
                auto client = std::make_unique<LluClient>(std::move(agent), stream());
                REQUIRE(client->hello(0));
                return client;
            }
        }
        FAIL("no lamppost " << id);
        return nullptr;
    }

    Json get(const std::string& path, int expected = 200) {
        const auto res = http->Get(path);
        REQUIRE(res);
        CHECK(res->status == expected);
        return Json::parse(res->body);
    }

    Json post(const std::string& path, const Json& body, int expected) {
        const auto res = http->Post(path, body.dump(), "application/json");
        REQUIRE(res);
        CHECK_MESSAGE(res->status == expected, res->body);
        return Json::parse(res->body);
    }

    TcuServer server;
    std::unique_ptr<httplib::Client> http;
};

SceneEvent collision(std::int64_t t) {
    SceneEvent e;
    e.sim_time_ms = t;
    e.anomaly = AnomalyClass::vehicle_collision;
    e.detection_probability = 1.0;
    e.confidence_if_detected = 0.9;
    return e;
}

SceneEvent parking(std::int64_t t) {
    SceneEvent e = collision(t);
    e.anomaly = AnomalyClass::illegally_parked_vehicle;
    return e;
}

/// First line where two logs disagree, for readable failures.
std::string first_difference(const std::string& a, const std::string& b) {
    std::istringstream sa(a), sb(b);
    std::string la, lb;
    for (int line = 1;; ++line) {
        const bool ga = static_cast<bool>(std::getline(sa, la));
        const bool gb = static_cast<bool>(std::getline(sb, lb));
        if (!ga && !gb) {
            return {};
        }
        if (!ga || !gb || la != lb) {
            return "line " + std::to_string(line) + ":\n  " + la + "\n  " + lb;
        }
    }
}

}  // namespace

TEST_CASE("addresses parse as host:port") {
    CHECK(parse_address("127.0.0.1:7400").port == 7400);
    CHECK(parse_address(":80").host == "127.0.0.1");
    CHECK(parse_address("example.org:8080").host == "example.org");
    CHECK_THROWS_AS(parse_address("7400"), ValidationError);
    CHECK_THROWS_AS(parse_address("h:99999"), ValidationError);
    CHECK_THROWS_AS(parse_address("h:x1"), ValidationError);
}

TEST_CASE("event hub fans out in order and bounds slow subscribers") {
    EventHub hub(3);
    auto a = hub.subscribe();
    auto b = hub.subscribe();
    for (int i = 0; i < 5; ++i) {
        hub.publish("queue_changed", Json{{"i", i}});
    }
    std::vector<int> seen;
    while (auto e = a->next(0ms)) {
        seen.push_back(e->data.at("i"));
    }
    CHECK(seen == std::vector<int>{2, 3, 4});
    CHECK(a->dropped() == 2);
    CHECK(b->next(0ms)->id == 3);

    const std::string frame = sse_frame({7, "risk_changed", Json{{"lambda", 3}}});
    CHECK(frame == "id: 7\nevent: risk_changed\ndata: {\"type\":\"risk_changed\",\"data\":{\"lambda\":3}}\n\n");

    std::thread waiter([&] { CHECK_FALSE(a->next(5000ms).has_value()); });
    hub.close();
    waiter.join();
    CHECK(a->closed());
    CHECK(hub.subscribe()->closed());
}

TEST_CASE("reports over the stream become alerts visible through the API") {
    Harness h;
    auto l2 = h.llu("L2");
    const auto outcome = l2->scene(parking(1000));
    REQUIRE(outcome.ack.has_value());
    CHECK(outcome.ack->ok);
    CHECK(outcome.ack->detail == "A-000001");
    auto l0 = h.llu("L0");
    REQUIRE(l0->scene(collision(2000)).ack.has_value());

    const Json lampposts = h.get("/api/v1/lampposts");
    CHECK(lampposts.size() == 3);
    const Json alerts = h.get("/api/v1/alerts");
    REQUIRE(alerts.size() == 2);
    CHECK(h.get("/api/v1/alerts?state=active").size() == 2);
    CHECK(h.get("/api/v1/alerts?state=confirmed").empty());
    CHECK(h.get("/api/v1/alerts?state=bogus", 400).at("field") == "state");
    CHECK(h.get("/api/v1/alerts/A-000002").at("varphi") == 5);
    h.get("/api/v1/alerts/A-999999", 404);

    const Json queue = h.get("/api/v1/queue");
    REQUIRE(queue.size() == 2);
    CHECK(queue[0].at("alert_id") == "A-000002");
    CHECK(queue[1].at("alert_id") == "A-000001");
    CHECK(h.get("/api/v1/risk").at("lambda") == 0);
    CHECK(h.get("/api/v1/snapshot").at("alerts").size() == 2);
    CHECK(h.get("/api/v1/health").at("sim_time_ms") == 2000);
}

TEST_CASE("operator actions map domain errors to HTTP statuses") {
    Harness h;
    auto l0 = h.llu("L0");
    REQUIRE(l0->scene(collision(1000)).ack);

    CHECK(h.post("/api/v1/alerts/A-000001/action", {{"action", "confirm"}, {"operator", "ann"}}, 200)
              .at("state") == "confirmed");
    const Json conflict = h.post("/api/v1/alerts/A-000001/action", {{"action", "dismiss_false_positive"}}, 409);
    CHECK(conflict.at("current_state") == "confirmed");
    h.post("/api/v1/alerts/A-404/action", {{"action", "confirm"}}, 404);
    CHECK(h.post("/api/v1/alerts/A-000001/action", {{"operator", "ann"}}, 400).at("field") == "action");
    CHECK(h.post("/api/v1/alerts/A-000001/action", {{"action", "explode"}}, 400).at("field") == "action");
    h.post("/api/v1/alerts/A-000001/action", {{"action", "propagate_further"}}, 400);
    const auto res = h.http->Post("/api/v1/alerts/A-000001/action", "{not json", "application/json");
    REQUIRE(res);
    CHECK(res->status == 400);

    const Json wider = h.post("/api/v1/alerts/A-000001/action",
                              {{"action", "propagate_further"}, {"radius_m", 250.0}}, 200);
    CHECK(wider.at("propagated_to") == Json::array({"L1", "L2"}));
    CHECK(h.post("/api/v1/alerts/A-000001/action", {{"action", "deactivate"}}, 200).at("state") == "deactivated");
    CHECK(h.get("/api/v1/queue").empty());
}

TEST_CASE("propagation commands reach neighbouring lampposts over the wire") {
    Harness h;
    auto l0 = h.llu("L0");
    auto l1 = h.llu("L1");
    auto l2 = h.llu("L2");
    REQUIRE(l0->scene(collision(1000)).ack);
    CHECK(eventually([&] { return l1->descriptor().signalling.mode == SignallingMode::accident; }));
    CHECK(l0->descriptor().signalling.mode == SignallingMode::accident);
    std::this_thread::sleep_for(50ms);
    CHECK(l2->descriptor().signalling.mode == SignallingMode::off);
    CHECK(l2->commands_received() == 0);

    h.post("/api/v1/alerts/A-000001/action", {{"action", "deactivate"}}, 200);
    CHECK(eventually([&] { return l1->descriptor().signalling.mode == SignallingMode::off; }));

    const Json pinned = [&] {
        const auto res = h.http->Put("/api/v1/lampposts/L2/override",
                                     Json{{"mode", "moderate_speed"}, {"operator", "ann"}}.dump(),
                                     "application/json");
        REQUIRE(res);
        CHECK(res->status == 200);
        return Json::parse(res->body);
    }();
    CHECK(pinned.at("signalling").at("mode") == "moderate_speed");
    CHECK(eventually([&] { return l2->descriptor().signalling.mode == SignallingMode::moderate_speed; }));
    const auto bad = h.http->Put("/api/v1/lampposts/L2/override", R"({"mode":"disco"})", "application/json");
    REQUIRE(bad);
    CHECK(bad->status == 400);
}

TEST_CASE("malformed frames are rejected without dropping the connection") {
    Harness h;
    FrameStream raw(connect_tcp(h.stream()));
    REQUIRE(raw.send_raw("{\"type\":\"BOGUS\"}\n"));
    REQUIRE(raw.send(protocol::make_heartbeat("feed:raw", 1, 0, {"feed", std::nullopt})));
    const auto frame = raw.read_frame();
    REQUIRE(frame.has_value());
    const auto ack = protocol::ack_of(protocol::decode(*frame));
    CHECK(ack.ack_of == protocol::MessageType::heartbeat);
    const auto diags = h.server.diagnostics();
    CHECK(std::any_of(diags.begin(), diags.end(),
                      [](const std::string& d) { return d.find("rejected frame") == 0; }));
}

TEST_CASE("feed updates over the stream raise lambda and warnings") {
    Harness h;
    PeerLink feed(h.stream());
    const auto ack = feed.request(protocol::make_feed_update("feed:weather", 1, {"weather", 1.0, 0.7, 0, 5000, "storm"}));
    REQUIRE(ack.has_value());
    CHECK(ack->ok);
    CHECK(h.get("/api/v1/risk").at("lambda") == 7);
    const Json warnings = h.get("/api/v1/warnings");
    REQUIRE(warnings.size() == 1);
    CHECK(warnings[0].at("active") == true);
    REQUIRE(feed.request(protocol::make_heartbeat("feed:weather", 2, 5000, {"feed", std::nullopt})));
    CHECK(h.get("/api/v1/risk").at("lambda") == 0);
    CHECK(h.get("/api/v1/warnings")[0].at("active") == false);
}

TEST_CASE("the event stream pushes TCU events as server-sent events") {
    Harness h;
    std::mutex mu;
    std::string received;
    std::atomic<bool> done{false};
    std::thread reader([&] {
        httplib::Client sse("127.0.0.1", h.server.http_port());
        sse.set_read_timeout(5, 0);
        sse.Get("/api/v1/events", [&](const char* data, std::size_t n) {
            std::lock_guard lock(mu);
            received.append(data, n);
            return received.find("event: queue_changed") == std::string::npos;
        });
        done = true;
    });
    REQUIRE(eventually([&] { return h.server.events().subscriber_count() == 1; }));
    auto l0 = h.llu("L0");
    REQUIRE(l0->scene(collision(1000)).ack);
    CHECK(eventually([&] { return done.load(); }));
    reader.join();

    std::lock_guard lock(mu);
    const auto created = received.find("event: alert_created");
    REQUIRE(created != std::string::npos);
    const auto data = received.find("data: ", created);
    const auto end = received.find('\n', data);
    const Json body = Json::parse(received.substr(data + 6, end - data - 6));
    CHECK(body.at("type") == "alert_created");
    CHECK(body.at("data").at("alert_id") == "A-000001");
    CHECK(eventually([&] { return h.server.events().subscriber_count() == 0; }));
}

TEST_CASE("profiles register and deploy through the API") {
    Harness h;
    auto l0 = h.llu("L0");
    auto l1 = h.llu("L1");
    CHECK(h.get("/api/v1/profiles").at("versions") == Json::array({1}));

    DetectorProfile v2 = default_detector_profile();
    v2.base_criticality_table[AnomalyClass::vehicle_collision] = CriticalityIndex(2);
    CHECK(h.post("/api/v1/profiles", to_json(v2), 201).at("version") == 2);
    Json incomplete = to_json(v2);
    incomplete.at("base_criticality").erase("traffic_congestion");
    CHECK(h.post("/api/v1/profiles", incomplete, 400).at("error").get<std::string>().find("traffic_congestion") !=
          std::string::npos);
    CHECK(h.get("/api/v1/profiles/2").at("version") == 2);
    h.get("/api/v1/profiles/9", 404);

    const Json report = h.post("/api/v1/profiles/2/deploy", {{"targets", {"L0", "L1", "L2", "ghost"}}}, 200);
    CHECK(report.at("ok") == 2);
    const Json& targets = report.at("targets");
    REQUIRE(targets.size() == 4);
    CHECK(targets[0].at("status") == "ok");
    CHECK(targets[2].at("status") == "unknown_target");
    CHECK(targets[3].at("status") == "unknown_target");
    CHECK(l0->descriptor().active_profile_version == 2);
    h.post("/api/v1/profiles/9/deploy", {{"targets", {"L0"}}}, 404);

    REQUIRE(l0->scene(collision(1000)).ack);
    const Json alert = h.get("/api/v1/alerts/A-000001");
    CHECK(alert.at("source_report").at("phi") == 2);
    CHECK(alert.at("source_report").at("metadata").at("profile_version") == "2");
    const Json lampposts = h.get("/api/v1/lampposts");
    CHECK(lampposts[0].at("active_profile_version") == 2);
    CHECK(lampposts[2].at("active_profile_version") == 1);
}

TEST_CASE("live composition and in-process simulation agree") {
    for (const std::string name : {"traced.json", "reference.json"}) {
        CAPTURE(name);
        const sim::Scenario s = sim::load_scenario(testing::source_dir() / "scenarios" / name);
        const sim::RunResult in_process = sim::run_scenario(s);
        const LiveRunResult live = run_live(s);
        CHECK(live.reports_emitted == in_process.summary.reports_emitted);
        CHECK(live.reports_unacknowledged == 0);
        CHECK(live.operator_action_errors == in_process.summary.operator_action_errors);
        CHECK(live.deployments_ok == in_process.summary.deployments_ok);
        CHECK(live.snapshot.at("alerts") == in_process.snapshot.at("alerts"));
        CHECK(live.snapshot == in_process.snapshot);
        CHECK_MESSAGE(live.audit_text == in_process.audit_text,
                      first_difference(live.audit_text, in_process.audit_text));
    }
}
