// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 when any fails.

#include <algorithm>
#include <cmath>
#include <chrono>
#include <cstdio>
#include <functional>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "generators.hpp"
#include "geo_oracle.hpp"
#include "heimdall/core/criticality.hpp"
#include "heimdall/core/error.hpp"
#include "heimdall/protocol/audit_log.hpp"
#include "heimdall/protocol/envelope.hpp"
#include "heimdall/risk/risk_engine.hpp"
#include "heimdall/sim/scenario.hpp"
#include "heimdall/sim/simulator.hpp"
#include "heimdall/tcu/fleet.hpp"
#include "heimdall/tcu/queue.hpp"
#include "heimdall/tcu/tcu.hpp"
#include "malformed_frames.hpp"
#include "test_support.hpp"

using namespace heimdall;
using Clock = std::chrono::steady_clock;

namespace {

struct Verdict {
    bool pass = true;
    std::string detail;
};

Verdict fail(std::string why) { return {false, std::move(why)}; }

double elapsed_ms(Clock::time_point since) {
    return std::chrono::duration<double, std::milli>(Clock::now() - since).count();
}

std::string fmt_ms(double ms) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.1f ms", ms);
    return buf;
}

constexpr int kQuarterAlphas[] = {0, 1, 2, 3, 4};

/// min(ceil(phi + (q/4) * lambda), n) in integer arithmetic.
int reassess_oracle(int phi, int q, int lambda, int n) {
    const int numerator = 4 * phi + q * lambda;
    return std::min((numerator + 3) / 4, n);
}

int reassess(int phi, int q, int lambda, int n, int m) {
    return reassess_criticality(CriticalityIndex(phi), WeightAlpha(q / 4.0), GlobalRiskIndex(lambda),
                                CriticalityBounds(n, m))
        .value();
}

Verdict reassessment_oracle() {
    const auto start = Clock::now();
    long cases = 0;
    for (int n = 1; n <= 10; ++n) {
        for (int m = 1; m <= 10; ++m) {
            for (int q : kQuarterAlphas) {
                for (int phi = 0; phi <= n; ++phi) {
                    for (int lambda = 0; lambda <= m; ++lambda) {
                        ++cases;
                        const int want = reassess_oracle(phi, q, lambda, n);
                        const int got = reassess(phi, q, lambda, n, m);
                        if (got != want) {
                            std::ostringstream os;
                            os << "N=" << n << " M=" << m << " alpha=" << q / 4.0 << " phi=" << phi
                               << " lambda=" << lambda << ": got " << got << ", oracle " << want;
                            return fail(os.str());
                        }
                    }
                }
            }
        }
    }
    const double ms = elapsed_ms(start);
    if (ms >= 1000.0) {
        return fail("grid took " + fmt_ms(ms));
    }
    return {true, std::to_string(cases) + " cases in " + fmt_ms(ms)};
}

Verdict reassessment_invariants() {
    long checks = 0;
    for (int n = 1; n <= 10; ++n) {
        for (int m = 1; m <= 10; ++m) {
            for (int q : kQuarterAlphas) {
                for (int phi = 0; phi <= n; ++phi) {
                    for (int lambda = 0; lambda <= m; ++lambda) {
                        const int v = reassess(phi, q, lambda, n, m);
                        std::ostringstream at;
                        at << " at N=" << n << " M=" << m << " alpha=" << q / 4.0 << " phi=" << phi
                           << " lambda=" << lambda;
                        if (v < phi) {
                            return fail("result below phi" + at.str());
                        }
                        if (v > n) {
                            return fail("result above N" + at.str());
                        }
                        if (lambda == 0 && v != phi) {
                            return fail("lambda 0 is not the identity" + at.str());
                        }
                        if (q == 0 && v != phi) {
                            return fail("alpha 0 is not the identity" + at.str());
                        }
                        if (lambda < m && reassess(phi, q, lambda + 1, n, m) < v) {
                            return fail("not monotone in lambda" + at.str());
                        }
                        if (phi < n && reassess(phi + 1, q, lambda, n, m) < v) {
                            return fail("not monotone in phi" + at.str());
                        }
                        if (q < 4 && reassess(phi, q + 1, lambda, n, m) < v) {
                            return fail("not monotone in alpha" + at.str());
                        }
                        checks += 7;
                    }
                }
            }
        }
    }
    return {true, std::to_string(checks) + " property checks"};
}

Verdict global_risk_oracle() {
    std::mt19937_64 rng(2024);
    std::uniform_int_distribution<int> size(0, 8);
    std::uniform_int_distribution<int> percent(0, 100);
    std::uniform_int_distribution<int> m_dist(1, 10);
    std::uniform_int_distribution<std::int64_t> time(0, 10'000);
    std::uniform_int_distribution<std::int64_t> ttl(1, 10'000);
    constexpr int kSets = 10'000;
    for (int i = 0; i < kSets; ++i) {
        const int m = m_dist(rng);
        const std::int64_t now = time(rng);
        std::vector<risk::RiskSignal> signals;
        // Severity and weight are whole percentages, so the oracle is exact
        // rational arithmetic: lambda = ceil(m * max(sv * wt) / 10000).
        int best = -1;
        const int count = size(rng);
        for (int k = 0; k < count; ++k) {
            const int sv = percent(rng);
            const int wt = percent(rng);
            risk::RiskSignal s{"src" + std::to_string(k), sv / 100.0, wt / 100.0, time(rng), ttl(rng), ""};
            if (s.issued_sim_time_ms + s.ttl_ms > now) {
                best = std::max(best, sv * wt);
            }
            signals.push_back(std::move(s));
        }
        const int want = best < 0 ? 0 : std::min(m, (m * best + 9999) / 10'000);
        const CriticalityBounds bounds(5, m);
        const int got = risk::compute_global_risk(signals, now, bounds).value();
        if (got != want) {
            return fail("set " + std::to_string(i) + ": got " + std::to_string(got) + ", oracle " +
                        std::to_string(want));
        }
        for (int shuffle = 0; shuffle < 3; ++shuffle) {
            std::shuffle(signals.begin(), signals.end(), rng);
            if (risk::compute_global_risk(signals, now, bounds).value() != got) {
                return fail("set " + std::to_string(i) + ": shuffled order changed lambda");
            }
        }
    }
    return {true, std::to_string(kSets) + " signal sets, 3 shuffles each"};
}

bool oracle_before(const tcu::Notification& a, const tcu::Notification& b) {
    if (a.varphi.value() != b.varphi.value()) {
        return a.varphi.value() > b.varphi.value();
    }
    if (a.created_sim_time_ms != b.created_sim_time_ms) {
        return a.created_sim_time_ms < b.created_sim_time_ms;
    }
    return a.alert_id < b.alert_id;
}

Verdict queue_order() {
    testing::Generator gen(77);
    std::vector<tcu::Notification> items = gen.notifications(1000);
    tcu::NotificationQueue queue;
    for (const auto& n : items) {
        queue.upsert(n);
    }
    std::vector<tcu::Notification> want = items;
    std::sort(want.begin(), want.end(), oracle_before);
    if (queue.snapshot() != want) {
        return fail("snapshot differs from the oracle sort");
    }

    std::mt19937_64& rng = gen.rng();
    std::uniform_int_distribution<std::size_t> pick(0, items.size() - 1);
    constexpr int kTriples = 100'000;
    for (int i = 0; i < kTriples; ++i) {
        const auto& a = items[pick(rng)];
        const auto& b = items[pick(rng)];
        const auto& c = items[pick(rng)];
        const auto ab = tcu::priority_compare(a, b);
        const auto ba = tcu::priority_compare(b, a);
        if ((ab < 0) != (ba > 0) || (ab == 0) != (ba == 0)) {
            return fail("antisymmetry broken for " + a.alert_id + ", " + b.alert_id);
        }
        if ((ab == 0) != (a.alert_id == b.alert_id)) {
            return fail("distinct notifications compare equal: " + a.alert_id + ", " + b.alert_id);
        }
        if (ab < 0 && tcu::priority_compare(b, c) < 0 && !(tcu::priority_compare(a, c) < 0)) {
            return fail("transitivity broken for " + a.alert_id + ", " + b.alert_id + ", " + c.alert_id);
        }
        if ((ab < 0) != oracle_before(a, b)) {
            return fail("comparator disagrees with the oracle on " + a.alert_id + ", " + b.alert_id);
        }
    }
    return {true, "1000 notifications, " + std::to_string(kTriples) + " sampled triples"};
}

Verdict propagation_geometry() {
    std::mt19937_64 rng(31337);
    std::uniform_real_distribution<double> radius(10.0, 3000.0);
    constexpr int kFleets = 100;
    std::size_t pairs = 0;
    for (int i = 0; i < kFleets; ++i) {
        const auto fleet = tcu::FleetIndex(testing::random_fleet(rng, 50, 5000.0));
        const double r = radius(rng);
        const testing::NeighborCheck check = testing::check_neighbors(fleet, r, 1e-9);
        if (!check.ok) {
            return fail("fleet " + std::to_string(i) + ": " + check.detail);
        }
        pairs += fleet.lampposts().size() * fleet.lampposts().size();
    }
    return {true, std::to_string(kFleets) + " fleets, " + std::to_string(pairs) + " ordered pairs"};
}

Verdict determinism() {
    const sim::Scenario s = sim::load_scenario(testing::source_dir() / "scenarios" / "reference.json");
    testing::TempDir a, b;
    const sim::RunResult first = sim::run_scenario(s, a.path());
    sim::run_scenario(s, b.path());
    const std::string log_a = testing::read_file(a / "audit.hal");
    if (log_a.empty() || log_a != testing::read_file(b / "audit.hal")) {
        return fail("audit logs of two runs differ");
    }
    const auto replayed = tcu::replay_tcu(protocol::replay_audit_file(a / "audit.hal").records);
    if (!replayed.log_identical) {
        return fail("replay diverged: " + replayed.divergence.value_or("?"));
    }
    if (sim::snapshot_text(replayed.tcu->snapshot()) != testing::read_file(a / "snapshot.json")) {
        return fail("replayed snapshot differs from snapshot.json");
    }
    return {true, std::to_string(first.summary.audit_records) + " records, " +
                      std::to_string(first.snapshot.at("alerts").size()) + " alerts, replay exact"};
}

Verdict traced_scenario() {
    const auto start = Clock::now();
    const sim::Scenario s = sim::load_scenario(testing::source_dir() / "scenarios" / "traced.json");
    const sim::RunResult r = sim::run_scenario(s);
    const double ms = elapsed_ms(start);
    const Json& snap = r.snapshot;

    const tcu::TcuConfig config = s.tcu_config();
    const int n = config.bounds.n_max();
    const int m = config.bounds.m_max();
    if (n != 5 || m != 10 || config.alpha.value() != 0.5) {
        return fail("scenario bounds are not N=5, M=10, alpha=0.5");
    }
    const int phi = s.profile.base_criticality_table.at(AnomalyClass::vehicle_collision).value();
    const feeds::FeedEntry& weather = s.feed_script.entries.at(0);
    const int severity_pct = static_cast<int>(std::lround(weather.severity * 100));
    const int weight_pct = static_cast<int>(std::lround(config.feed_weights.at(weather.source) * 100));
    const int lambda_oracle = std::min(m, (m * severity_pct * weight_pct + 9999) / 10'000);
    const int varphi_oracle = reassess_oracle(phi, 2, lambda_oracle, n);
    if (phi != 3 || lambda_oracle != 7 || varphi_oracle != 5) {
        return fail("oracle inputs differ from phi 3, lambda 7, varphi 5");
    }

    if (snap.at("alerts").size() != 1) {
        return fail(std::to_string(snap.at("alerts").size()) + " alerts");
    }
    const Json& alert = snap.at("alerts")[0];
    if (alert.at("varphi") != varphi_oracle || alert.at("lambda_at_ingest") != lambda_oracle) {
        return fail("alert varphi " + alert.at("varphi").dump() + ", lambda " + alert.at("lambda_at_ingest").dump());
    }
    const Json& warnings = snap.at("warnings");
    if (warnings.size() != 1 || config.preventive_threshold.value() != 6 ||
        warnings[0].at("lambda_at_issue").get<int>() < 6) {
        return fail("expected one warning at threshold 6, got " + warnings.dump());
    }

    std::vector<std::string> in_range;
    const GeoPoint origin = s.fleet.at(0).position;
    for (const sim::FleetEntry& f : s.fleet) {
        if (f.lamppost_id != s.fleet.at(0).lamppost_id &&
            testing::chord_distance_m(origin, f.position) <= s.propagation_radius_m) {
            in_range.push_back(f.lamppost_id);
        }
    }
    if (alert.at("propagated_to").get<std::vector<std::string>>() != in_range) {
        return fail("propagated to " + alert.at("propagated_to").dump());
    }
    for (const Json& l : snap.at("lampposts")) {
        const std::string id = l.at("lamppost_id");
        const bool commanded = id == "T0" || std::find(in_range.begin(), in_range.end(), id) != in_range.end();
        if ((l.at("signalling").at("mode") == "accident") != commanded) {
            return fail(id + " signalling " + l.at("signalling").at("mode").dump());
        }
    }
    if (ms >= 5000.0) {
        return fail("took " + fmt_ms(ms));
    }
    std::string targets;
    for (const auto& id : in_range) {
        targets += (targets.empty() ? "" : ",") + id;
    }
    return {true, "varphi 5, lambda 7, 1 warning, commands to " + targets + " in " + fmt_ms(ms)};
}

Verdict protocol_round_trip() {
    testing::Generator gen(4242);
    constexpr int kEnvelopes = 10'000;
    for (int i = 0; i < kEnvelopes; ++i) {
        const protocol::Envelope e = gen.envelope();
        const std::string frame = protocol::encode(e);
        if (!(protocol::decode(frame) == e)) {
            return fail("envelope " + std::to_string(i) + " did not round-trip: " + frame);
        }
    }
    const auto cases = testing::malformed_frames();
    for (const auto& c : cases) {
        try {
            protocol::decode(c.frame);
            return fail("accepted malformed frame: " + c.name);
        } catch (const ProtocolError& e) {
            if (e.field() != c.field) {
                return fail(c.name + " named field '" + e.field() + "', expected '" + c.field + "'");
            }
        }
    }
    return {true, std::to_string(kEnvelopes) + " envelopes, " + std::to_string(cases.size()) +
                      " malformed frames"};
}

Verdict ingestion_throughput() {
    tcu::TcuConfig config = tcu::TcuConfig::defaults();
    std::mt19937_64 rng(9001);
    config.fleet = testing::random_fleet(rng, 200, 5000.0);
    protocol::AuditLog log;
    tcu::TerritorialControlUnit tcu(config, log);
    testing::Generator gen(9002);

    constexpr int kReports = 10'000;
    std::vector<AnomalyReport> reports;
    for (int i = 0; i < kReports; ++i) {
        const auto& lamp = config.fleet[static_cast<std::size_t>(gen.integer(0, static_cast<int>(config.fleet.size()) - 1))];
        reports.push_back(testing::report(lamp.lamppost_id + "-r" + std::to_string(i), lamp.lamppost_id,
                                          gen.anomaly(), gen.integer(0, 5), i * 10, lamp.position));
    }

    double ingest_ms = 0.0;
    std::set<std::string> expected_ids;
    int lambda_seen = 0;
    for (int i = 0; i < kReports; ++i) {
        if (i % 1000 == 500) {
            tcu.on_feed_update({"weather", gen.unit(), 0.7, i * 10LL, 3000, "scripted"}, i * 10LL);
        }
        const auto start = Clock::now();
        const auto out = tcu.ingest_report(reports[static_cast<std::size_t>(i)]);
        ingest_ms += elapsed_ms(start);
        if (out.status != tcu::IngestOutcome::Status::created) {
            return fail("report " + std::to_string(i) + " not created: " + out.reason);
        }
        expected_ids.insert(out.alert->alert_id);
        lambda_seen = std::max(lambda_seen, out.alert->lambda_at_ingest.value());

        if (i % 250 == 0 || i == kReports - 1) {
            const auto q = tcu.snapshot_queue();
            if (q.size() != expected_ids.size()) {
                return fail("queue holds " + std::to_string(q.size()) + " of " +
                            std::to_string(expected_ids.size()) + " alerts");
            }
            if (!std::is_sorted(q.begin(), q.end(), oracle_before) ||
                std::adjacent_find(q.begin(), q.end(), [](const auto& a, const auto& b) {
                    return !oracle_before(a, b);
                }) != q.end()) {
                return fail("queue out of order after report " + std::to_string(i));
            }
            for (const auto& n : q) {
                if (!expected_ids.contains(n.alert_id) || n.varphi.value() > 5) {
                    return fail("unexpected queue entry " + n.alert_id);
                }
            }
        }
    }
    if (ingest_ms >= 5000.0) {
        return fail("ingest took " + fmt_ms(ingest_ms));
    }
    return {true, std::to_string(kReports) + " reports in " + fmt_ms(ingest_ms) + ", max lambda " +
                      std::to_string(lambda_seen)};
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria = {
        {"reassessment-oracle", reassessment_oracle},
        {"reassessment-invariants", reassessment_invariants},
        {"global-risk-fusion", global_risk_oracle},
        {"queue-order", queue_order},
        {"propagation-geometry", propagation_geometry},
        {"determinism-replay", determinism},
        {"traced-scenario", traced_scenario},
        {"protocol-round-trip", protocol_round_trip},
        {"ingestion-throughput", ingestion_throughput},
    };
    int failures = 0;
    for (const auto& [name, check] : criteria) {
        Verdict v;
        try {
            v = check();
        } catch (const std::exception& e) {
            v = fail(std::string("exception: ") + e.what());
        }
        std::printf("%s %-24s %s\n", v.pass ? "PASS" : "FAIL", name.c_str(), v.detail.c_str());
        failures += v.pass ? 0 : 1;
    }
    std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
    return failures == 0 ? 0 : 1;
}
