#include "heimdall/core/types.hpp"

#include <cmath>

#include "heimdall/core/error.hpp"

namespace heimdall {

CriticalityBounds::CriticalityBounds(int n_max, int m_max) : n_max_(n_max), m_max_(m_max) {
    if (n_max < 1) {
        throw ValidationError("n_max must be >= 1, got " + std::to_string(n_max), "n_max");
    }
    if (m_max < 1) {
        throw ValidationError("m_max must be >= 1, got " + std::to_string(m_max), "m_max");
    }
}

CriticalityIndex::CriticalityIndex(int value) : value_(value) {
    if (value < 0) {
        throw ValidationError("criticality index must be >= 0, got " + std::to_string(value),
                              "phi");
    }
}

GlobalRiskIndex::GlobalRiskIndex(int value) : value_(value) {
    if (value < 0) {
        throw ValidationError("global risk index must be >= 0, got " + std::to_string(value),
                              "lambda");
    }
}

WeightAlpha::WeightAlpha(double value) : value_(value) {
    if (!std::isfinite(value) || value < 0.0 || value > 1.0) {
        throw ValidationError("alpha must be in [0, 1]", "alpha");
    }
}

namespace {

constexpr std::array<std::string_view, 8> kClassNames = {
    "illegally_parked_vehicle", "risky_overtaking", "vehicle_on_pedestrian_area",
    "red_light_violation",      "vehicle_collision", "wrong_way_driving",
    "risky_u_turn",             "traffic_congestion",
};

constexpr std::array<std::string_view, 4> kStateNames = {
    "active", "confirmed", "dismissed_false_positive", "deactivated"};

}  // namespace

std::string_view to_string(AnomalyClass c) noexcept {
    return kClassNames[static_cast<std::size_t>(c)];
}

std::optional<AnomalyClass> anomaly_class_from_string(std::string_view name) noexcept {
    for (std::size_t i = 0; i < kClassNames.size(); ++i) {
        if (kClassNames[i] == name) {
            return static_cast<AnomalyClass>(i);
        }
    }
    return std::nullopt;
}

AnomalyKind kind(AnomalyClass c) noexcept {
    switch (c) {
        case AnomalyClass::illegally_parked_vehicle:
        case AnomalyClass::vehicle_on_pedestrian_area:
            return AnomalyKind::static_scene;
        default:
            return AnomalyKind::dynamic_scene;
    }
}

std::string_view to_string(AnomalyKind k) noexcept {
    return k == AnomalyKind::static_scene ? "static" : "dynamic";
}

GeoPoint GeoPoint::make(double lat, double lon) {
    if (!std::isfinite(lat) || lat < -90.0 || lat > 90.0) {
        throw ValidationError("lat must be finite and in [-90, 90]", "lat");
    }
    if (!std::isfinite(lon) || lon < -180.0 || lon > 180.0) {
        throw ValidationError("lon must be finite and in [-180, 180]", "lon");
    }
    return GeoPoint{lat, lon};
}

std::string_view to_string(AlertState s) noexcept {
    return kStateNames[static_cast<std::size_t>(s)];
}

std::optional<AlertState> alert_state_from_string(std::string_view name) noexcept {
    for (std::size_t i = 0; i < kStateNames.size(); ++i) {
        if (kStateNames[i] == name) {
            return static_cast<AlertState>(i);
        }
    }
    return std::nullopt;
}

bool can_transition(AlertState from, AlertState to) noexcept {
    switch (from) {
        case AlertState::active:
            return to == AlertState::confirmed || to == AlertState::dismissed_false_positive ||
                   to == AlertState::deactivated;
        case AlertState::confirmed:
            return to == AlertState::deactivated;
        case AlertState::dismissed_false_positive:
        case AlertState::deactivated:
            return false;
    }
    return false;
}

bool is_terminal(AlertState s) noexcept {
    return s == AlertState::dismissed_false_positive || s == AlertState::deactivated;
}

void Alert::transition_to(AlertState to) {
    if (!can_transition(state, to)) {
        throw ConflictError("alert " + alert_id + " cannot move from " +
                                std::string(to_string(state)) + " to " + std::string(to_string(to)),
                            std::string(to_string(state)));
    }
    state = to;
}

Json to_json(const GeoPoint& p) {
    Json j = Json::object();
    j["lat"] = p.lat;
    j["lon"] = p.lon;
    return j;
}

GeoPoint geo_point_from_json(const Json& j, std::string_view path) {
    json_field::require_object(j, path);
    const double lat = json_field::get_number_in(j, "lat", -90.0, 90.0, path);
    const double lon = json_field::get_number_in(j, "lon", -180.0, 180.0, path);
    return GeoPoint{lat, lon};
}

AnomalyClass anomaly_class_field(const Json& obj, std::string_view key, std::string_view path) {
    const std::string name = json_field::get_string(obj, key, path);
    const auto c = anomaly_class_from_string(name);
    if (!c) {
        std::string where = path.empty() ? std::string(key) : std::string(path) + "." + std::string(key);
        throw ProtocolError(where + ": unknown anomaly class " + name, std::string(key));
    }
    return *c;
}

Json to_json(const AnomalyReport& r) {
    Json j = Json::object();
    j["report_id"] = r.report_id;
    j["lamppost_id"] = r.lamppost_id;
    j["anomaly"] = std::string(to_string(r.anomaly));
    j["phi"] = r.phi.value();
    j["position"] = to_json(r.position);
    j["sim_time_ms"] = r.sim_time_ms;
    j["confidence"] = r.confidence;
    Json meta = Json::object();
    for (const auto& [k, v] : r.metadata) {
        meta[k] = v;
    }
    j["metadata"] = std::move(meta);
    return j;
}

AnomalyReport anomaly_report_from_json(const Json& j, std::string_view path) {
    using namespace json_field;
    require_object(j, path);
    AnomalyReport r;
    r.report_id = get_string(j, "report_id", path);
    if (r.report_id.empty()) {
        throw ProtocolError("report_id: must not be empty", "report_id");
    }
    r.lamppost_id = get_string(j, "lamppost_id", path);
    r.anomaly = anomaly_class_field(j, "anomaly", path);
    r.phi = CriticalityIndex(static_cast<int>(get_int_in(j, "phi", 0, 1'000'000, path)));
    const std::string pos_path = path.empty() ? "position" : std::string(path) + ".position";
    r.position = geo_point_from_json(require(j, "position", path), pos_path);
    r.sim_time_ms = get_int_in(j, "sim_time_ms", 0, INT64_MAX, path);
    r.confidence = get_number_in(j, "confidence", 0.0, 1.0, path);
    const Json& meta = require(j, "metadata", path);
    const std::string meta_path = path.empty() ? "metadata" : std::string(path) + ".metadata";
    require_object(meta, meta_path);
    for (const auto& [k, v] : meta.items()) {
        if (!v.is_string()) {
            throw ProtocolError(meta_path + "." + k + ": expected string", "metadata");
        }
        r.metadata.emplace(k, v.get<std::string>());
    }
    return r;
}

Json to_json(const Alert& a) {
    Json j = Json::object();
    j["alert_id"] = a.alert_id;
    j["source_report"] = to_json(a.source_report);
    j["varphi"] = a.varphi.value();
    j["lambda_at_ingest"] = a.lambda_at_ingest.value();
    j["state"] = std::string(to_string(a.state));
    j["propagated_to"] = a.propagated_to;
    j["created_sim_time_ms"] = a.created_sim_time_ms;
    return j;
}

}  // namespace heimdall
