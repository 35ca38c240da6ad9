#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "heimdall/core/json.hpp"
#include "heimdall/sim/scenario.hpp"

namespace heimdall::net {

struct LiveRunResult {
    Json snapshot;
    std::string audit_text;
    std::uint64_t reports_emitted = 0;
    std::uint64_t reports_unacknowledged = 0;
    std::uint64_t operator_action_errors = 0;
    std::uint64_t deployments_ok = 0;
    std::vector<std::string> diagnostics;
};

/// Runs a scenario through the live composition: a TcuServer on loopback
/// ports, one LluClient connection per lamppost, a feed connection and the
/// operator HTTP API. Steps follow sim::scenario_timeline and each waits for
/// its ACK or HTTP response before the next, so the result is comparable
/// with sim::run_scenario. Deployments and operator actions pass the step
/// time as "sim_time_ms".
LiveRunResult run_live(const sim::Scenario& scenario);

}  // namespace heimdall::net
