#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "heimdall/core/error.hpp"
#include "heimdall/risk/risk_engine.hpp"

using namespace heimdall;
using risk::RiskSignal;

namespace {

RiskSignal signal(std::string source, double severity, double weight, std::int64_t issued = 0,
                  std::int64_t ttl = 1'000'000) {
    RiskSignal s;
    s.source_id = std::move(source);
    s.severity = severity;
    s.weight = weight;
    s.issued_sim_time_ms = issued;
    s.ttl_ms = ttl;
    return s;
}

// Severities and weights drawn as hundredths keep the product an exact
// rational k / 10000, so the ceiling can be taken in integers.
struct Hundredths {
    int severity;
    int weight;
};

int lambda_oracle(const std::vector<Hundredths>& live, int m_max) {
    int best = 0;
    for (const Hundredths& h : live) {
        best = std::max(best, h.severity * h.weight);
    }
    const long long scaled = static_cast<long long>(best) * m_max;
    const long long ceil = (scaled + 9999) / 10000;
    return static_cast<int>(std::min<long long>(ceil, m_max));
}

}  // namespace

TEST_CASE("global risk examples") {
    const CriticalityBounds b(5, 10);
    CHECK(risk::compute_global_risk({}, 0, b).value() == 0);
    const std::vector one{signal("civil_protection", 1.0, 1.0)};
    CHECK(risk::compute_global_risk(one, 0, b).value() == 10);
    const std::vector two{signal("weather", 0.5, 0.8), signal("public_utility", 0.3, 1.0)};
    CHECK(risk::compute_global_risk(two, 0, b).value() == 4);
    const std::vector weather{signal("weather", 1.0, 0.7)};
    CHECK(risk::compute_global_risk(weather, 0, b).value() == 7);
}

TEST_CASE("expired signals do not contribute") {
    const CriticalityBounds b(5, 10);
    const std::vector s{signal("weather", 1.0, 1.0, 0, 100)};
    CHECK(risk::compute_global_risk(s, 99, b).value() == 10);
    CHECK(risk::compute_global_risk(s, 100, b).value() == 0);
}

TEST_CASE("expire_signals keeps only live signals in order") {
    CHECK(risk::expire_signals({}, 12345).empty());
    const std::vector boundary{signal("weather", 1.0, 1.0, 0, 100)};
    CHECK(risk::expire_signals(boundary, 100).empty());
    const std::vector pair{signal("s1", 0.5, 1.0, 0, 200), signal("s2", 0.5, 1.0, 0, 50)};
    const auto live = risk::expire_signals(pair, 100);
    REQUIRE(live.size() == 1);
    CHECK(live[0].source_id == "s1");
}

TEST_CASE("weighted-max fusion equals the integer oracle over random sets") {
    std::mt19937_64 rng(20240611);
    std::uniform_int_distribution<int> hundredth(0, 100);
    std::uniform_int_distribution<int> size(0, 8);
    std::uniform_int_distribution<int> m_dist(1, 10);
    for (int trial = 0; trial < 10'000; ++trial) {
        const int m_max = m_dist(rng);
        const CriticalityBounds b(5, m_max);
        std::vector<RiskSignal> signals;
        std::vector<Hundredths> live;
        const int n = size(rng);
        for (int i = 0; i < n; ++i) {
            const Hundredths h{hundredth(rng), hundredth(rng)};
            const bool alive = rng() % 4 != 0;
            signals.push_back(signal("s" + std::to_string(i), h.severity / 100.0, h.weight / 100.0,
                                     alive ? 0 : -1000, alive ? 5000 : 500));
            if (alive) {
                live.push_back(h);
            }
        }
        const int expected = lambda_oracle(live, m_max);
        REQUIRE(risk::compute_global_risk(signals, 0, b).value() == expected);
        std::shuffle(signals.begin(), signals.end(), rng);
        REQUIRE(risk::compute_global_risk(signals, 0, b).value() == expected);
    }
}

TEST_CASE("adding a signal never lowers lambda") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const CriticalityBounds b(5, 10);
    for (int trial = 0; trial < 1000; ++trial) {
        std::vector<RiskSignal> signals;
        int previous = 0;
        for (int i = 0; i < 8; ++i) {
            signals.push_back(signal("s", unit(rng), unit(rng)));
            const int now = risk::compute_global_risk(signals, 0, b).value();
            REQUIRE(now >= previous);
            REQUIRE(now <= 10);
            previous = now;
        }
    }
}

TEST_CASE("signal validation") {
    CHECK_THROWS_AS(risk::validate_signal(signal("weather", 1.1, 0.5)), ValidationError);
    CHECK_THROWS_AS(risk::validate_signal(signal("weather", 0.5, -0.1)), ValidationError);
    CHECK_THROWS_AS(risk::validate_signal(signal("weather", 0.5, 0.5, 0, 0)), ValidationError);
    CHECK_NOTHROW(risk::validate_signal(signal("weather", 0.0, 1.0)));
}

TEST_CASE("signal store expires and reports context") {
    risk::SignalStore store(CriticalityBounds(5, 10));
    store.add(signal("weather", 1.0, 0.7, 0, 5000));
    store.add(signal("public_utility", 0.5, 0.4, 1000, 1000));
    const auto ctx = store.context(1500);
    CHECK(ctx.lambda.value() == 7);
    CHECK(ctx.contributing.size() == 2);
    const auto expired = store.expire(2000);
    REQUIRE(expired.size() == 1);
    CHECK(expired[0].source_id == "public_utility");
    CHECK(store.expire(5000).size() == 1);
    CHECK(store.context(5000).lambda.value() == 0);
}

TEST_CASE("default feed weights") {
    const auto w = risk::default_feed_weights();
    CHECK(w.at("civil_protection") == 1.0);
    CHECK(w.at("weather") == 0.7);
    CHECK(w.at("public_utility") == 0.4);
}

TEST_CASE("risk signal JSON round-trips") {
    RiskSignal s = signal("weather", 0.8, 0.7, 1000, 5000);
    s.description = "storm";
    CHECK(risk::risk_signal_from_json(risk::to_json(s)) == s);
}
