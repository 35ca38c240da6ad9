#include <fcntl.h>
#include <httplib.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <cstdio>
#include <thread>

#include "doctest.h"
#include "heimdall/feeds/feed_script.hpp"
#include "heimdall/sim/scenario.hpp"
#include "heimdall/sim/simulator.hpp"
#include "test_support.hpp"

using namespace heimdall;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    int code = -1;
    std::string out;
    std::string err;
};

/// Runs the CLI to completion with stdout and stderr captured.
Outcome cli(const std::vector<std::string>& args, const testing::TempDir& dir) {
    static int counter = 0;
    const fs::path out = dir / ("out" + std::to_string(++counter));
    const fs::path err = dir / ("err" + std::to_string(counter));
    const pid_t pid = fork();
    REQUIRE(pid >= 0);
    if (pid == 0) {
        const int out_fd = open(out.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
        const int err_fd = open(err.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
        if (out_fd < 0 || err_fd < 0) {
            _exit(126);
        }
        dup2(out_fd, STDOUT_FILENO);
        dup2(err_fd, STDERR_FILENO);
        std::vector<char*> argv{const_cast<char*>(HEIMDALL_CLI)};
        for (const std::string& a : args) {
            argv.push_back(const_cast<char*>(a.c_str()));
        }
        argv.push_back(nullptr);
        execv(HEIMDALL_CLI, argv.data());
        _exit(127);
    }
    int status = 0;
    waitpid(pid, &status, 0);
    return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, testing::read_file(out), testing::read_file(err)};
}

/// A long-running CLI process whose stdout is read line by line.
class Background {
public:
    explicit Background(const std::vector<std::string>& args) {
        int fds[2];
        REQUIRE(pipe(fds) == 0);
        pid_ = fork();
        REQUIRE(pid_ >= 0);
        if (pid_ == 0) {
            dup2(fds[1], STDOUT_FILENO);
            close(fds[0]);
            close(fds[1]);
            std::vector<char*> argv{const_cast<char*>(HEIMDALL_CLI)};
            for (const std::string& a : args) {
                argv.push_back(const_cast<char*>(a.c_str()));
            }
            argv.push_back(nullptr);
            execv(HEIMDALL_CLI, argv.data());
            _exit(127);
        }
        close(fds[1]);
        out_ = fdopen(fds[0], "r");
    }

    ~Background() {
        if (pid_ > 0) {
            kill(pid_, SIGKILL);
            waitpid(pid_, nullptr, 0);
        }
        if (out_ != nullptr) {
            std::fclose(out_);
        }
    }

    std::string line() {
        char buf[512];
        if (std::fgets(buf, sizeof buf, out_) == nullptr) {
            return {};
        }
        std::string s(buf);
        if (!s.empty() && s.back() == '\n') {
            s.pop_back();
        }
        return s;
    }

    std::string rest() {
        std::string all;
        while (true) {
            const std::string l = line();
            if (l.empty() && std::feof(out_)) {
                return all;
            }
            all += l + "\n";
        }
    }

    int terminate() {
        kill(pid_, SIGTERM);
        return finish();
    }

    int finish() {
        int status = 0;
        waitpid(pid_, &status, 0);
        pid_ = -1;
        return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    }

private:
    pid_t pid_ = -1;
    FILE* out_ = nullptr;
};

std::string scenario_path(const std::string& name) {
    return (testing::source_dir() / "scenarios" / name).string();
}

}  // namespace

TEST_CASE("usage errors exit with 1 and help with 0") {
    testing::TempDir dir;
    CHECK(cli({"--help"}, dir).code == 0);
    CHECK(cli({}, dir).code == 1);
    CHECK(cli({"fly"}, dir).code == 1);
    CHECK(cli({"sim", "run", scenario_path("traced.json")}, dir).code == 1);
    CHECK(cli({"sim", "run", scenario_path("traced.json"), "--out", (dir / "o").string(), "--bogus"}, dir).code == 1);
    CHECK(cli({"sim", "validate", (dir / "missing.json").string()}, dir).code == 1);
}

TEST_CASE("sim validate reports every problem") {
    testing::TempDir dir;
    const Outcome ok = cli({"sim", "validate", scenario_path("reference.json")}, dir);
    CHECK(ok.code == 0);
    CHECK(ok.out.rfind("ok: 16 lampposts", 0) == 0);

    testing::write_file(dir / "bad.json",
                        R"({"seed":1,"duration_ms":100,"propagation_radius_m":-1,
                            "fleet":[{"id":"a","lat":0,"lon":0},{"id":"a","lat":0,"lon":0}],
                            "scene_events":{"b":[]}})");
    const Outcome bad = cli({"sim", "validate", (dir / "bad.json").string()}, dir);
    CHECK(bad.code == 1);
    CHECK(bad.err.find("duplicate lamppost id a") != std::string::npos);
    CHECK(bad.err.find("propagation_radius_m must be > 0") != std::string::npos);
    CHECK(bad.err.find("unknown lamppost b") != std::string::npos);

    testing::write_file(dir / "broken.json", "{\"seed\": ");
    const Outcome broken = cli({"sim", "run", (dir / "broken.json").string(), "--out", (dir / "x").string()}, dir);
    CHECK(broken.code == 1);
    CHECK(broken.err.find("malformed JSON at byte") != std::string::npos);
    CHECK_FALSE(fs::exists(dir / "x"));
}

TEST_CASE("sim run writes outputs that audit replay confirms") {
    testing::TempDir dir;
    const fs::path out = dir / "run";
    const Outcome run = cli({"sim", "run", scenario_path("reference.json"), "--out", out.string()}, dir);
    REQUIRE(run.code == 0);
    CHECK(Json::parse(run.out) == Json::parse(testing::read_file(out / "summary.json")));
    CHECK(testing::read_file(out / "metrics.csv").rfind("metric,value\n", 0) == 0);

    const Outcome replay = cli({"audit", "replay", (out / "audit.hal").string(), "--snapshot",
                                (dir / "replayed.json").string()},
                               dir);
    CHECK(replay.code == 0);
    CHECK(Json::parse(replay.out).at("log_identical") == true);
    CHECK(testing::read_file(dir / "replayed.json") == testing::read_file(out / "snapshot.json"));

    const Outcome reseeded =
        cli({"sim", "run", scenario_path("reference.json"), "--out", (dir / "s").string(), "--seed", "43"}, dir);
    CHECK(reseeded.code == 0);
    CHECK(Json::parse(reseeded.out).at("seed") == 43);
    CHECK(testing::read_file(dir / "s" / "audit.hal") != testing::read_file(out / "audit.hal"));

    std::string log = testing::read_file(out / "audit.hal");
    const auto pos = log.find("\"varphi\":");
    REQUIRE(pos != std::string::npos);
    log[pos + 9] = log[pos + 9] == '1' ? '2' : '1';
    testing::write_file(dir / "tampered.hal", log);
    const Outcome tampered = cli({"audit", "replay", (dir / "tampered.hal").string()}, dir);
    CHECK(tampered.code == 1);
    CHECK(Json::parse(tampered.out).at("log_identical") == false);
}

TEST_CASE("profile register persists versions in a registry directory") {
    testing::TempDir dir;
    const std::string profile = (testing::source_dir() / "config" / "default_profile.json").string();
    const std::string reg = (dir / "registry").string();
    CHECK(Json::parse(cli({"profile", "register", profile, "--registry", reg}, dir).out).at("version") == 1);
    CHECK(Json::parse(cli({"profile", "register", profile, "--registry", reg}, dir).out).at("version") == 2);
    CHECK(cli({"profile", "register", profile}, dir).code == 1);
}

TEST_CASE("tcu serve, llu run and feed run compose like the simulator") {
    testing::TempDir dir;
    const sim::Scenario s = sim::load_scenario(scenario_path("traced.json"));
    const sim::RunResult expected = sim::run_scenario(s);
    testing::write_file(dir / "feed.ndjson", feeds::format_feed_script(s.feed_script));

    Background server({"tcu", "serve", "--config", scenario_path("traced.json"), "--listen", "127.0.0.1:0",
                       "--http", "127.0.0.1:0", "--quiet", "--snapshot", (dir / "final.json").string()});
    const std::string stream_line = server.line();
    const std::string http_line = server.line();
    REQUIRE(stream_line.rfind("stream 127.0.0.1:", 0) == 0);
    REQUIRE(http_line.rfind("http 127.0.0.1:", 0) == 0);
    const std::string stream = stream_line.substr(7);
    const std::string http = http_line.substr(5);

    const Outcome feed = cli({"feed", "run", "--script", (dir / "feed.ndjson").string(), "--connect", stream,
                              "--horizon-ms", std::to_string(s.duration_ms)},
                             dir);
    REQUIRE_MESSAGE(feed.code == 0, feed.err);
    CHECK(Json::parse(feed.out).at("feed_updates") == 1);

    httplib::Client api("127.0.0.1", static_cast<int>(std::stoi(http.substr(http.rfind(':') + 1))));
    const auto await_senders = [&](int n) {
        const auto deadline = std::chrono::steady_clock::now() + std::chrono::seconds(5);
        while (std::chrono::steady_clock::now() < deadline) {
            const auto res = api.Get("/api/v1/health");
            if (res && Json::parse(res->body).at("senders") == n) {
                return true;
            }
            std::this_thread::sleep_for(std::chrono::milliseconds(20));
        }
        return false;
    };
    REQUIRE(await_senders(0));
    Background neighbour({"llu", "run", "--id", "T1", "--connect", stream, "--scenario", scenario_path("traced.json"),
                          "--linger-ms", "3000"});
    REQUIRE(await_senders(1));

    const Outcome reporter = cli({"llu", "run", "--id", "T0", "--connect", stream, "--scenario",
                                  scenario_path("traced.json"), "--linger-ms", "0"},
                                 dir);
    REQUIRE_MESSAGE(reporter.code == 0, reporter.err);
    CHECK(Json::parse(reporter.out).at("reports_acknowledged") == 1);

    DetectorProfile v2 = s.profile;
    v2.confidence_threshold[AnomalyClass::traffic_congestion] = 0.9;
    testing::write_file(dir / "v2.json", to_json(v2).dump());
    const Outcome reg = cli({"profile", "register", (dir / "v2.json").string(), "--http", http}, dir);
    REQUIRE_MESSAGE(reg.code == 0, reg.err);
    CHECK(Json::parse(reg.out).at("version") == 2);
    const Outcome deploy = cli({"profile", "deploy", "--version", "2", "--targets", "T1,T9", "--http", http}, dir);
    CHECK(deploy.code == 2);
    const Json report = Json::parse(deploy.out);
    CHECK(report.at("ok") == 1);
    CHECK(report.at("targets")[1].at("status") == "unknown_target");

    REQUIRE(neighbour.finish() == 0);
    const Json t1 = Json::parse(neighbour.rest());
    CHECK(t1.at("commands_received") == 1);
    CHECK(t1.at("signalling").at("mode") == "accident");
    CHECK(t1.at("active_profile_version") == 2);

    CHECK(server.terminate() == 0);
    const Json final = Json::parse(testing::read_file(dir / "final.json"));
    CHECK(final.at("alerts") == expected.snapshot.at("alerts"));
    CHECK(final.at("risk") == expected.snapshot.at("risk"));
    CHECK(final.at("warnings") == expected.snapshot.at("warnings"));
}
