#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "heimdall/core/json.hpp"
#include "heimdall/core/types.hpp"

namespace heimdall::risk {

inline constexpr std::string_view kWeather = "weather";
inline constexpr std::string_view kCivilProtection = "civil_protection";
inline constexpr std::string_view kPublicUtility = "public_utility";

/// One item of external information, e.g. a weather bulletin.
struct RiskSignal {
    std::string source_id;
    double severity = 0.0;
    double weight = 0.0;
    std::int64_t issued_sim_time_ms = 0;
    std::int64_t ttl_ms = 1;
    std::string description;

    /// Live while issued + ttl > now; exactly at issued + ttl it has expired.
    bool live_at(std::int64_t now_ms) const noexcept { return issued_sim_time_ms + ttl_ms > now_ms; }
    double contribution() const noexcept { return weight * severity; }

    bool operator==(const RiskSignal&) const = default;
};

/// Throws ValidationError when severity/weight fall outside [0, 1] or
/// ttl_ms <= 0.
void validate_signal(const RiskSignal& signal);

struct GlobalRiskContext {
    GlobalRiskIndex lambda;
    std::vector<RiskSignal> contributing;
    std::int64_t computed_sim_time_ms = 0;

    bool operator==(const GlobalRiskContext&) const = default;
};

/// Weighted-maximum fusion over live signals:
/// lambda = min(m_max, ceil(m_max * max(weight * severity))), 0 when none are live.
GlobalRiskIndex compute_global_risk(std::span<const RiskSignal> signals, std::int64_t now_ms,
                                    const CriticalityBounds& bounds);

/// Live signals in their original order.
std::vector<RiskSignal> expire_signals(std::span<const RiskSignal> signals, std::int64_t now_ms);

/// Default feed weights: civil_protection 1.0, weather 0.7, public_utility 0.4.
std::map<std::string, double> default_feed_weights();

/// Owns the live set of signals. Not thread-safe; the TCU event loop is the
/// single owner.
class SignalStore {
public:
    explicit SignalStore(CriticalityBounds bounds) : bounds_(bounds) {}

    void add(RiskSignal signal);
    /// Drops expired signals and returns them (original order).
    std::vector<RiskSignal> expire(std::int64_t now_ms);
    GlobalRiskContext context(std::int64_t now_ms) const;

    const std::vector<RiskSignal>& signals() const noexcept { return signals_; }

private:
    CriticalityBounds bounds_;
    std::vector<RiskSignal> signals_;
};

Json to_json(const RiskSignal& s);
RiskSignal risk_signal_from_json(const Json& j, std::string_view path = {});
Json to_json(const GlobalRiskContext& ctx);

}  // namespace heimdall::risk
