#include "heimdall/core/profile.hpp"

#include "heimdall/core/error.hpp"

namespace heimdall {

std::vector<AnomalyClass> missing_base_criticality(const DetectorProfile& profile) {
    std::vector<AnomalyClass> missing;
    for (const AnomalyClass c : kAllAnomalyClasses) {
        if (!profile.base_criticality_table.contains(c)) {
            missing.push_back(c);
        }
    }
    return missing;
}

void validate_profile(const DetectorProfile& profile,
                      const std::optional<CriticalityBounds>& bounds) {
    std::vector<std::string> problems;
    std::string field;

    const auto missing = missing_base_criticality(profile);
    if (!missing.empty()) {
        std::string list;
        for (const AnomalyClass c : missing) {
            if (!list.empty()) {
                list += ", ";
            }
            list += to_string(c);
        }
        problems.push_back("base_criticality missing classes: " + list);
        field = "base_criticality";
    }
    for (const AnomalyClass c : profile.enabled_classes) {
        const auto it = profile.confidence_threshold.find(c);
        if (it == profile.confidence_threshold.end()) {
            problems.push_back("thresholds missing enabled class " + std::string(to_string(c)));
            if (field.empty()) field = "thresholds";
        }
    }
    for (const auto& [c, t] : profile.confidence_threshold) {
        if (!(t >= 0.0 && t <= 1.0)) {
            problems.push_back("threshold for " + std::string(to_string(c)) + " out of range [0, 1]");
            if (field.empty()) field = "thresholds";
        }
    }
    if (bounds) {
        for (const auto& [c, phi] : profile.base_criticality_table) {
            if (!phi.fits(*bounds)) {
                problems.push_back("base_criticality for " + std::string(to_string(c)) +
                                   " exceeds n_max " + std::to_string(bounds->n_max()));
                if (field.empty()) field = "base_criticality";
            }
        }
    }
    if (profile.version < 1) {
        problems.push_back("version must be >= 1");
        if (field.empty()) field = "version";
    }

    if (!problems.empty()) {
        std::string message = "invalid detector profile: ";
        for (std::size_t i = 0; i < problems.size(); ++i) {
            if (i > 0) {
                message += "; ";
            }
            message += problems[i];
        }
        throw ValidationError(message, field);
    }
}

DetectorProfile default_detector_profile() {
    DetectorProfile p;
    p.version = 1;
    const std::map<AnomalyClass, int> table = {
        {AnomalyClass::vehicle_collision, 5},
        {AnomalyClass::wrong_way_driving, 4},
        {AnomalyClass::vehicle_on_pedestrian_area, 4},
        {AnomalyClass::red_light_violation, 3},
        {AnomalyClass::risky_overtaking, 3},
        {AnomalyClass::risky_u_turn, 3},
        {AnomalyClass::traffic_congestion, 2},
        {AnomalyClass::illegally_parked_vehicle, 1},
    };
    for (const auto& [c, phi] : table) {
        p.enabled_classes.insert(c);
        p.confidence_threshold[c] = 0.5;
        p.base_criticality_table.emplace(c, CriticalityIndex(phi));
    }
    return p;
}

Json to_json(const DetectorProfile& profile) {
    Json j = Json::object();
    j["version"] = profile.version;
    Json enabled = Json::array();
    Json thresholds = Json::object();
    Json base = Json::object();
    for (const AnomalyClass c : kAllAnomalyClasses) {
        const std::string name(to_string(c));
        if (profile.enabled_classes.contains(c)) {
            enabled.push_back(name);
        }
        if (const auto it = profile.confidence_threshold.find(c);
            it != profile.confidence_threshold.end()) {
            thresholds[name] = it->second;
        }
        if (const auto it = profile.base_criticality_table.find(c);
            it != profile.base_criticality_table.end()) {
            base[name] = it->second.value();
        }
    }
    j["enabled_classes"] = std::move(enabled);
    j["thresholds"] = std::move(thresholds);
    j["base_criticality"] = std::move(base);
    return j;
}

DetectorProfile detector_profile_from_json(const Json& j, std::string_view path) {
    using namespace json_field;
    require_object(j, path);
    const auto sub = [&](std::string_view key) {
        return path.empty() ? std::string(key) : std::string(path) + "." + std::string(key);
    };

    DetectorProfile p;
    if (has(j, "version") && !j.at("version").is_null()) {
        p.version = static_cast<int>(get_int_in(j, "version", 1, INT32_MAX, path));
    }

    const Json& enabled = require(j, "enabled_classes", path);
    if (!enabled.is_array()) {
        throw ProtocolError(sub("enabled_classes") + ": expected array", "enabled_classes");
    }
    for (const Json& item : enabled) {
        if (!item.is_string()) {
            throw ProtocolError(sub("enabled_classes") + ": expected array of strings",
                                "enabled_classes");
        }
        const auto c = anomaly_class_from_string(item.get<std::string>());
        if (!c) {
            throw ProtocolError(sub("enabled_classes") + ": unknown anomaly class " +
                                    item.get<std::string>(),
                                "enabled_classes");
        }
        p.enabled_classes.insert(*c);
    }

    const Json& thresholds = require(j, "thresholds", path);
    require_object(thresholds, sub("thresholds"));
    for (const auto& [name, value] : thresholds.items()) {
        const auto c = anomaly_class_from_string(name);
        if (!c) {
            throw ProtocolError(sub("thresholds") + ": unknown anomaly class " + name, "thresholds");
        }
        p.confidence_threshold[*c] = get_number_in(thresholds, name, 0.0, 1.0, sub("thresholds"));
    }

    const Json& base = require(j, "base_criticality", path);
    require_object(base, sub("base_criticality"));
    for (const auto& [name, value] : base.items()) {
        const auto c = anomaly_class_from_string(name);
        if (!c) {
            throw ProtocolError(sub("base_criticality") + ": unknown anomaly class " + name,
                                "base_criticality");
        }
        p.base_criticality_table.insert_or_assign(
            *c, CriticalityIndex(static_cast<int>(
                    get_int_in(base, name, 0, 1'000'000, sub("base_criticality")))));
    }
    return p;
}

DetectorProfile load_detector_profile(const std::filesystem::path& file) {
    return detector_profile_from_json(read_json_file(file, "profile"));
}

}  // namespace heimdall
