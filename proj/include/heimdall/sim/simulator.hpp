#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>

#include "heimdall/core/json.hpp"
#include "heimdall/protocol/envelope.hpp"
#include "heimdall/sim/scenario.hpp"

namespace heimdall::sim {

struct RunSummary {
    std::uint64_t seed = 0;
    std::int64_t duration_ms = 0;
    std::uint64_t scene_events = 0;
    std::uint64_t reports_emitted = 0;
    std::uint64_t reports_ingested = 0;
    std::uint64_t reports_rejected = 0;
    std::uint64_t false_positive_reports = 0;
    std::map<std::string, std::uint64_t> alerts_by_state;
    /// Number of neighbours an alert reached -> number of alerts.
    std::map<std::size_t, std::uint64_t> fanout_histogram;
    std::uint64_t warnings_issued = 0;
    std::uint64_t commands_sent = 0;
    std::uint64_t feed_updates = 0;
    std::uint64_t operator_actions = 0;
    std::uint64_t operator_action_errors = 0;
    std::uint64_t deployments_ok = 0;
    std::uint64_t deployments_failed = 0;
    int final_lambda = 0;
    std::uint64_t audit_records = 0;

    bool operator==(const RunSummary&) const = default;
};

Json to_json(const RunSummary& s);
/// "metric,value" rows, one per scalar plus one per histogram bucket.
std::string metrics_csv(const RunSummary& s);

struct RunResult {
    RunSummary summary;
    Json snapshot;
    std::string audit_text;
};

/// One step of a scenario's merged timeline. `index` points into the
/// scenario's deployments, operator_actions or scene_events[lamppost_id].
struct TimelineStep {
    enum class Kind { feed, deploy, scene, action };

    std::int64_t t_ms = 0;
    Kind kind = Kind::feed;
    protocol::Envelope feed;
    std::string lamppost_id;
    std::size_t index = 0;
};

/// Feed frames (updates and expiry heartbeats, sender "feed:script"),
/// deployments, scene events and operator actions in execution order: by
/// time, then expiry, feed, deploy, scene, action, then script order.
std::vector<TimelineStep> scenario_timeline(const Scenario& scenario);

/// Runs the scenario on the simulation clock. Every message between the
/// LLUs, the feeds, the registry and the TCU is encoded and decoded, so the
/// wire codec is exercised exactly as in live mode.
///
/// With `out_dir`, writes audit.hal, snapshot.json, summary.json and
/// metrics.csv there. Throws ValidationError listing every problem when the
/// scenario is invalid, before anything is written.
RunResult run_scenario(const Scenario& scenario,
                       const std::optional<std::filesystem::path>& out_dir = std::nullopt);

/// Canonical text of a snapshot as written to snapshot.json.
std::string snapshot_text(const Json& snapshot);

}  // namespace heimdall::sim
