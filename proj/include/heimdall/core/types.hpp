#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "heimdall/core/json.hpp"

namespace heimdall {

/// Upper bounds of the local criticality scale (n_max) and of the global risk
/// scale (m_max). Fixed for a deployment.
class CriticalityBounds {
public:
    CriticalityBounds(int n_max, int m_max);

    int n_max() const noexcept { return n_max_; }
    int m_max() const noexcept { return m_max_; }

    bool operator==(const CriticalityBounds&) const = default;

private:
    int n_max_;
    int m_max_;
};

/// Local severity level. Non-negative; the upper bound depends on the
/// governing CriticalityBounds and is checked with `fits`.
class CriticalityIndex {
public:
    constexpr CriticalityIndex() = default;
    explicit CriticalityIndex(int value);

    int value() const noexcept { return value_; }
    bool fits(const CriticalityBounds& bounds) const noexcept { return value_ <= bounds.n_max(); }

    auto operator<=>(const CriticalityIndex&) const = default;

private:
    int value_ = 0;
};

class GlobalRiskIndex {
public:
    constexpr GlobalRiskIndex() = default;
    explicit GlobalRiskIndex(int value);

    int value() const noexcept { return value_; }
    bool fits(const CriticalityBounds& bounds) const noexcept { return value_ <= bounds.m_max(); }

    auto operator<=>(const GlobalRiskIndex&) const = default;

private:
    int value_ = 0;
};

/// Weight of the global risk index in reassessment, in [0, 1].
class WeightAlpha {
public:
    explicit WeightAlpha(double value);

    double value() const noexcept { return value_; }
    bool operator==(const WeightAlpha&) const = default;

private:
    double value_;
};

enum class AnomalyClass {
    illegally_parked_vehicle,
    risky_overtaking,
    vehicle_on_pedestrian_area,
    red_light_violation,
    vehicle_collision,
    wrong_way_driving,
    risky_u_turn,
    traffic_congestion,
};

enum class AnomalyKind { static_scene, dynamic_scene };

inline constexpr std::array<AnomalyClass, 8> kAllAnomalyClasses = {
    AnomalyClass::illegally_parked_vehicle, AnomalyClass::risky_overtaking,
    AnomalyClass::vehicle_on_pedestrian_area, AnomalyClass::red_light_violation,
    AnomalyClass::vehicle_collision, AnomalyClass::wrong_way_driving,
    AnomalyClass::risky_u_turn, AnomalyClass::traffic_congestion,
};

std::string_view to_string(AnomalyClass c) noexcept;
std::optional<AnomalyClass> anomaly_class_from_string(std::string_view name) noexcept;

/// Static anomalies are recognizable from a single frame.
AnomalyKind kind(AnomalyClass c) noexcept;
std::string_view to_string(AnomalyKind k) noexcept;

struct GeoPoint {
    double lat = 0.0;
    double lon = 0.0;

    /// Throws ValidationError unless both coordinates are finite and in range.
    static GeoPoint make(double lat, double lon);

    bool operator==(const GeoPoint&) const = default;
};

struct AnomalyReport {
    std::string report_id;
    std::string lamppost_id;
    AnomalyClass anomaly = AnomalyClass::traffic_congestion;
    CriticalityIndex phi;
    GeoPoint position;
    std::int64_t sim_time_ms = 0;
    double confidence = 0.0;
    std::map<std::string, std::string> metadata;

    bool operator==(const AnomalyReport&) const = default;
};

enum class AlertState { active, confirmed, dismissed_false_positive, deactivated };

std::string_view to_string(AlertState s) noexcept;
std::optional<AlertState> alert_state_from_string(std::string_view name) noexcept;

/// Legal lifecycle edges: active -> {confirmed, dismissed_false_positive,
/// deactivated}; confirmed -> deactivated. Everything else is rejected.
bool can_transition(AlertState from, AlertState to) noexcept;
bool is_terminal(AlertState s) noexcept;

struct Alert {
    std::string alert_id;
    AnomalyReport source_report;
    CriticalityIndex varphi;
    GlobalRiskIndex lambda_at_ingest;
    AlertState state = AlertState::active;
    std::vector<std::string> propagated_to;
    std::int64_t created_sim_time_ms = 0;

    /// Moves to `to`, throwing ConflictError naming the current state when
    /// the edge is not in the lifecycle.
    void transition_to(AlertState to);

    bool operator==(const Alert&) const = default;
};

// JSON forms shared by the wire protocol, the audit log and the HTTP API.
Json to_json(const GeoPoint& p);
GeoPoint geo_point_from_json(const Json& j, std::string_view path = {});

Json to_json(const AnomalyReport& r);
/// Strict parse; range checks cover everything decidable without bounds.
AnomalyReport anomaly_report_from_json(const Json& j, std::string_view path = {});

Json to_json(const Alert& a);

AnomalyClass anomaly_class_field(const Json& obj, std::string_view key, std::string_view path = {});

}  // namespace heimdall
