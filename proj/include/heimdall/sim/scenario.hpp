#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "heimdall/core/json.hpp"
#include "heimdall/core/profile.hpp"
#include "heimdall/core/types.hpp"
#include "heimdall/feeds/feed_script.hpp"
#include "heimdall/llu/detector.hpp"
#include "heimdall/tcu/tcu.hpp"

namespace heimdall::sim {

struct FleetEntry {
    std::string lamppost_id;
    GeoPoint position;
};

struct ScriptedAction {
    std::int64_t t_ms = 0;
    std::string alert_id;
    tcu::OperatorAction action;
    std::string operator_id = "operator";
};

struct ScriptedDeployment {
    std::int64_t t_ms = 0;
    DetectorProfile profile;
    std::vector<std::string> targets;
};

struct Scenario {
    std::uint64_t seed = 0;
    CriticalityBounds bounds{5, 10};
    WeightAlpha alpha{0.5};
    std::vector<FleetEntry> fleet;
    std::map<std::string, std::vector<SceneEvent>> scene_events;
    feeds::FeedScript feed_script;
    std::int64_t duration_ms = 0;
    double propagation_radius_m = 300.0;
    GlobalRiskIndex preventive_threshold{6};
    std::map<std::string, double> feed_weights;
    DetectorProfile profile;
    std::vector<ScriptedAction> operator_actions;
    std::vector<ScriptedDeployment> deployments;

    tcu::TcuConfig tcu_config() const;
};

/// Structural parse. Throws ValidationError (or ProtocolError naming the
/// field) on malformed input; semantic checks live in validate_scenario.
Scenario scenario_from_json(const Json& j);
Scenario load_scenario(const std::filesystem::path& file);

/// Every semantic problem found: duplicate ids, events or feeds outside
/// [0, duration_ms], unsorted feeds, events for unknown lampposts, invalid
/// profiles. Empty when the scenario is valid.
std::vector<std::string> validate_scenario(const Scenario& s);

/// Applies {"class": phi} entries over a profile's base-criticality table.
DetectorProfile with_base_overrides(DetectorProfile profile, const Json& overrides,
                                    std::string_view path);

/// `base` replaced by the document's "profile" and then patched by its
/// "base_criticality_override", as scenarios and deployments specify them.
DetectorProfile document_profile(const Json& obj, const DetectorProfile& base,
                                 std::string_view path = {});

}  // namespace heimdall::sim
