#include "heimdall/tcu/propagation.hpp"

#include <algorithm>

#include "heimdall/core/criticality.hpp"

namespace heimdall::tcu {

std::vector<SignallingCommand> propagate_alert(Alert& alert, const FleetIndex& fleet,
                                               double radius_m, const CriticalityBounds& bounds) {
    std::vector<SignallingCommand> commands;
    if (alert.varphi.value() < 1 || is_terminal(alert.state)) {
        return commands;
    }
    const std::string& source = alert.source_report.lamppost_id;
    const GeoPoint origin =
        fleet.contains(source) ? fleet.at(source).position : alert.source_report.position;
    const SignallingMode mode = signalling_band(alert.varphi, bounds);

    for (std::string& id : neighbors_within(origin, fleet, radius_m, source)) {
        const auto& done = alert.propagated_to;
        if (std::find(done.begin(), done.end(), id) != done.end()) {
            continue;
        }
        commands.push_back({id, mode, alert.alert_id});
        alert.propagated_to.push_back(std::move(id));
    }
    return commands;
}

Json to_json(const PreventiveWarning& w) {
    Json j = Json::object();
    j["warning_id"] = w.warning_id;
    j["trigger_source_id"] = w.trigger_source_id;
    j["lambda_at_issue"] = w.lambda_at_issue.value();
    j["affected_lampposts"] = w.affected_lampposts;
    j["issued_sim_time_ms"] = w.issued_sim_time_ms;
    j["active"] = w.active;
    j["cleared_sim_time_ms"] = w.cleared_sim_time_ms ? Json(*w.cleared_sim_time_ms) : Json(nullptr);
    return j;
}

PreventiveDecision evaluate_preventive(const risk::GlobalRiskContext& ctx, const FleetIndex& fleet,
                                       GlobalRiskIndex threshold,
                                       std::span<const PreventiveWarning> warnings) {
    PreventiveDecision decision;
    const auto source_live = [&](const std::string& source) {
        return std::any_of(ctx.contributing.begin(), ctx.contributing.end(),
                           [&](const risk::RiskSignal& s) { return s.source_id == source; });
    };

    if (ctx.lambda < threshold) {
        for (const PreventiveWarning& w : warnings) {
            if (w.active) {
                decision.clear.push_back(w.warning_id);
            }
        }
        return decision;
    }

    // Strongest live signal; ties go to the lexicographically smaller source.
    const risk::RiskSignal* trigger = nullptr;
    for (const risk::RiskSignal& s : ctx.contributing) {
        if (trigger == nullptr || s.contribution() > trigger->contribution() ||
            (s.contribution() == trigger->contribution() && s.source_id < trigger->source_id)) {
            trigger = &s;
        }
    }
    if (trigger == nullptr) {
        return decision;
    }

    bool already_active = false;
    for (const PreventiveWarning& w : warnings) {
        if (!w.active) {
            continue;
        }
        if (w.trigger_source_id == trigger->source_id) {
            already_active = true;
        } else if (!source_live(w.trigger_source_id)) {
            decision.clear.push_back(w.warning_id);
        }
    }
    if (!already_active) {
        PreventiveWarning w;
        w.trigger_source_id = trigger->source_id;
        w.lambda_at_issue = ctx.lambda;
        w.affected_lampposts = fleet.ids();
        w.issued_sim_time_ms = ctx.computed_sim_time_ms;
        w.active = true;
        decision.issue = std::move(w);
    }
    return decision;
}

GlobalRiskIndex default_preventive_threshold(const CriticalityBounds& bounds) {
    return GlobalRiskIndex(exact_ceil(0.6 * static_cast<double>(bounds.m_max())));
}

}  // namespace heimdall::tcu
