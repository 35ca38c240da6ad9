#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "heimdall/core/json.hpp"
#include "heimdall/core/types.hpp"
#include "heimdall/llu/signalling.hpp"
#include "heimdall/risk/risk_engine.hpp"
#include "heimdall/tcu/fleet.hpp"

namespace heimdall::tcu {

struct SignallingCommand {
    std::string lamppost_id;
    SignallingMode mode;
    std::string alert_id;

    bool operator==(const SignallingCommand&) const = default;
};

/// Commands the lampposts near the alert's source to the band of its varphi.
/// Only neighbours not already in `alert.propagated_to` receive a command,
/// and they are appended to it. Terminal alerts and varphi = 0 yield nothing.
std::vector<SignallingCommand> propagate_alert(Alert& alert, const FleetIndex& fleet,
                                               double radius_m, const CriticalityBounds& bounds);

struct PreventiveWarning {
    std::string warning_id;
    std::string trigger_source_id;
    GlobalRiskIndex lambda_at_issue;
    std::vector<std::string> affected_lampposts;
    std::int64_t issued_sim_time_ms = 0;
    bool active = true;
    std::optional<std::int64_t> cleared_sim_time_ms;

    bool operator==(const PreventiveWarning&) const = default;
};

Json to_json(const PreventiveWarning& w);

struct PreventiveDecision {
    /// New warning to issue; `warning_id` is left for the caller to assign.
    std::optional<PreventiveWarning> issue;
    /// Ids of active warnings to clear.
    std::vector<std::string> clear;
};

/// While lambda >= threshold, issues a fleet-wide warning for the strongest
/// live source unless one is already active for it, and clears active
/// warnings whose source is no longer live. Below the threshold every active
/// warning is cleared.
PreventiveDecision evaluate_preventive(const risk::GlobalRiskContext& ctx, const FleetIndex& fleet,
                                       GlobalRiskIndex threshold,
                                       std::span<const PreventiveWarning> warnings);

/// Default preventive threshold: ceil(0.6 * m_max).
GlobalRiskIndex default_preventive_threshold(const CriticalityBounds& bounds);

}  // namespace heimdall::tcu
