#include "heimdall/risk/risk_engine.hpp"

#include <algorithm>
#include <cmath>

#include "heimdall/core/criticality.hpp"
#include "heimdall/core/error.hpp"

namespace heimdall::risk {

void validate_signal(const RiskSignal& s) {
    if (!(s.severity >= 0.0 && s.severity <= 1.0)) {
        throw ValidationError("signal severity out of range [0, 1]", "severity");
    }
    if (!(s.weight >= 0.0 && s.weight <= 1.0)) {
        throw ValidationError("signal weight out of range [0, 1]", "weight");
    }
    if (s.ttl_ms <= 0) {
        throw ValidationError("signal ttl_ms must be > 0", "ttl_ms");
    }
    if (s.source_id.empty()) {
        throw ValidationError("signal source_id must not be empty", "source_id");
    }
}

GlobalRiskIndex compute_global_risk(std::span<const RiskSignal> signals, std::int64_t now_ms,
                                    const CriticalityBounds& bounds) {
    double strongest = 0.0;
    bool any_live = false;
    for (const RiskSignal& s : signals) {
        if (s.live_at(now_ms)) {
            strongest = any_live ? std::max(strongest, s.contribution()) : s.contribution();
            any_live = true;
        }
    }
    if (!any_live) {
        return GlobalRiskIndex(0);
    }
    const int m = bounds.m_max();
    const int scaled = exact_ceil(static_cast<double>(m) * strongest);
    return GlobalRiskIndex(std::clamp(scaled, 0, m));
}

std::vector<RiskSignal> expire_signals(std::span<const RiskSignal> signals, std::int64_t now_ms) {
    std::vector<RiskSignal> live;
    live.reserve(signals.size());
    std::copy_if(signals.begin(), signals.end(), std::back_inserter(live),
                 [now_ms](const RiskSignal& s) { return s.live_at(now_ms); });
    return live;
}

std::map<std::string, double> default_feed_weights() {
    return {
        {std::string(kCivilProtection), 1.0},
        {std::string(kWeather), 0.7},
        {std::string(kPublicUtility), 0.4},
    };
}

void SignalStore::add(RiskSignal signal) {
    validate_signal(signal);
    signals_.push_back(std::move(signal));
}

std::vector<RiskSignal> SignalStore::expire(std::int64_t now_ms) {
    std::vector<RiskSignal> expired;
    std::vector<RiskSignal> live;
    for (RiskSignal& s : signals_) {
        (s.live_at(now_ms) ? live : expired).push_back(std::move(s));
    }
    signals_ = std::move(live);
    return expired;
}

GlobalRiskContext SignalStore::context(std::int64_t now_ms) const {
    GlobalRiskContext ctx;
    ctx.contributing = expire_signals(signals_, now_ms);
    ctx.lambda = compute_global_risk(ctx.contributing, now_ms, bounds_);
    ctx.computed_sim_time_ms = now_ms;
    return ctx;
}

Json to_json(const RiskSignal& s) {
    Json j = Json::object();
    j["source_id"] = s.source_id;
    j["severity"] = s.severity;
    j["weight"] = s.weight;
    j["issued_sim_time_ms"] = s.issued_sim_time_ms;
    j["ttl_ms"] = s.ttl_ms;
    j["description"] = s.description;
    return j;
}

RiskSignal risk_signal_from_json(const Json& j, std::string_view path) {
    using namespace json_field;
    require_object(j, path);
    RiskSignal s;
    s.source_id = get_string(j, "source_id", path);
    s.severity = get_number_in(j, "severity", 0.0, 1.0, path);
    s.weight = get_number_in(j, "weight", 0.0, 1.0, path);
    s.issued_sim_time_ms = get_int_in(j, "issued_sim_time_ms", 0, INT64_MAX / 2, path);
    s.ttl_ms = get_int_in(j, "ttl_ms", 1, INT64_MAX / 2, path);
    s.description = get_string(j, "description", path);
    return s;
}

Json to_json(const GlobalRiskContext& ctx) {
    Json j = Json::object();
    j["lambda"] = ctx.lambda.value();
    Json signals = Json::array();
    for (const RiskSignal& s : ctx.contributing) {
        signals.push_back(to_json(s));
    }
    j["contributing"] = std::move(signals);
    j["computed_sim_time_ms"] = ctx.computed_sim_time_ms;
    return j;
}

}  // namespace heimdall::risk
