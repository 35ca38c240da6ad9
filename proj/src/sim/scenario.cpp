#include "heimdall/sim/scenario.hpp"

#include <set>

#include "heimdall/core/error.hpp"
#include "heimdall/risk/risk_engine.hpp"
#include "heimdall/tcu/propagation.hpp"

namespace heimdall::sim {

namespace {

const Json& array_field(const Json& j, std::string_view key) {
    const Json& v = json_field::require(j, key);
    if (!v.is_array()) {
        throw ProtocolError(std::string(key) + ": expected array", std::string(key));
    }
    return v;
}

std::string indexed(std::string_view key, std::size_t i) {
    return std::string(key) + "[" + std::to_string(i) + "]";
}

}  // namespace

DetectorProfile document_profile(const Json& obj, const DetectorProfile& base, std::string_view path) {
    DetectorProfile p = base;
    if (json_field::has(obj, "profile")) {
        p = detector_profile_from_json(obj.at("profile"),
                                       path.empty() ? "profile" : std::string(path) + ".profile");
    }
    if (json_field::has(obj, "base_criticality_override")) {
        p = with_base_overrides(std::move(p), obj.at("base_criticality_override"),
                                path.empty() ? "base_criticality_override"
                                             : std::string(path) + ".base_criticality_override");
    }
    return p;
}

DetectorProfile with_base_overrides(DetectorProfile profile, const Json& overrides,
                                    std::string_view path) {
    json_field::require_object(overrides, path);
    for (const auto& [name, value] : overrides.items()) {
        const auto c = anomaly_class_from_string(name);
        if (!c) {
            throw ProtocolError(std::string(path) + ": unknown anomaly class " + name, name);
        }
        const auto phi = json_field::get_int_in(overrides, name, 0, 1'000'000, path);
        profile.base_criticality_table.insert_or_assign(*c, CriticalityIndex(static_cast<int>(phi)));
    }
    return profile;
}

tcu::TcuConfig Scenario::tcu_config() const {
    tcu::TcuConfig c = tcu::TcuConfig::defaults();
    c.bounds = bounds;
    c.alpha = alpha;
    c.propagation_radius_m = propagation_radius_m;
    c.preventive_threshold = preventive_threshold;
    c.feed_weights = feed_weights;
    for (const FleetEntry& f : fleet) {
        LamppostDescriptor d;
        d.lamppost_id = f.lamppost_id;
        d.position = f.position;
        d.active_profile_version = 1;
        c.fleet.push_back(std::move(d));
    }
    return c;
}

Scenario scenario_from_json(const Json& j) {
    using namespace json_field;
    require_object(j, "");
    Scenario s;
    s.seed = static_cast<std::uint64_t>(get_int_in(j, "seed", 0, INT64_MAX));
    const int n_max = has(j, "n_max") ? static_cast<int>(get_int_in(j, "n_max", 1, 1'000'000)) : 5;
    const int m_max = has(j, "m_max") ? static_cast<int>(get_int_in(j, "m_max", 1, 1'000'000)) : 10;
    s.bounds = CriticalityBounds(n_max, m_max);
    if (has(j, "alpha")) {
        s.alpha = WeightAlpha(get_number_in(j, "alpha", 0.0, 1.0));
    }
    s.duration_ms = get_int_in(j, "duration_ms", 0, INT64_MAX / 4);
    if (has(j, "propagation_radius_m")) {
        s.propagation_radius_m = get_number(j, "propagation_radius_m");
    }
    s.preventive_threshold = has(j, "preventive_threshold")
                                 ? GlobalRiskIndex(static_cast<int>(
                                       get_int_in(j, "preventive_threshold", 0, m_max)))
                                 : tcu::default_preventive_threshold(s.bounds);
    s.feed_weights = risk::default_feed_weights();
    if (has(j, "feed_weights")) {
        const Json& w = j.at("feed_weights");
        require_object(w, "feed_weights");
        for (const auto& [source, value] : w.items()) {
            s.feed_weights[source] = get_number_in(w, source, 0.0, 1.0, "feed_weights");
        }
    }
    s.profile = document_profile(j, default_detector_profile(), "");
    s.profile.version = 1;

    const Json& fleet = array_field(j, "fleet");
    for (std::size_t i = 0; i < fleet.size(); ++i) {
        const LamppostDescriptor d = lamppost_from_json(fleet[i], indexed("fleet", i));
        s.fleet.push_back({d.lamppost_id, d.position});
    }

    if (has(j, "scene_events")) {
        const Json& events = j.at("scene_events");
        require_object(events, "scene_events");
        for (const auto& [id, list] : events.items()) {
            const std::string path = "scene_events." + id;
            if (!list.is_array()) {
                throw ProtocolError(path + ": expected array", id);
            }
            auto& out = s.scene_events[id];
            for (std::size_t i = 0; i < list.size(); ++i) {
                out.push_back(scene_event_from_json(list[i], indexed(path, i)));
            }
        }
    }

    if (has(j, "feed_script")) {
        const Json& feed = array_field(j, "feed_script");
        for (std::size_t i = 0; i < feed.size(); ++i) {
            s.feed_script.entries.push_back(
                feeds::feed_entry_from_json(feed[i], i + 1, "feed_script entry"));
        }
    }

    if (has(j, "operator_actions")) {
        const Json& actions = array_field(j, "operator_actions");
        for (std::size_t i = 0; i < actions.size(); ++i) {
            const std::string path = indexed("operator_actions", i);
            const Json& a = actions[i];
            ScriptedAction sa;
            sa.t_ms = get_int_in(a, "t_ms", 0, INT64_MAX / 4, path);
            sa.alert_id = get_string(a, "alert_id", path);
            const std::string name = get_string(a, "action", path);
            const auto k = tcu::operator_action_from_string(name);
            if (!k) {
                throw ProtocolError(path + ".action: unknown action " + name, "action");
            }
            sa.action.kind = *k;
            if (has(a, "radius_m")) {
                sa.action.radius_m = get_number(a, "radius_m", path);
            }
            if (has(a, "operator")) {
                sa.operator_id = get_string(a, "operator", path);
            }
            s.operator_actions.push_back(std::move(sa));
        }
    }

    if (has(j, "deployments")) {
        const Json& deps = array_field(j, "deployments");
        for (std::size_t i = 0; i < deps.size(); ++i) {
            const std::string path = indexed("deployments", i);
            const Json& d = deps[i];
            ScriptedDeployment sd;
            sd.t_ms = get_int_in(d, "t_ms", 0, INT64_MAX / 4, path);
            sd.profile = document_profile(d, s.profile, path);
            const Json& targets = require(d, "targets", path);
            if (!targets.is_array()) {
                throw ProtocolError(path + ".targets: expected array", "targets");
            }
            for (const Json& t : targets) {
                if (!t.is_string()) {
                    throw ProtocolError(path + ".targets: expected strings", "targets");
                }
                sd.targets.push_back(t.get<std::string>());
            }
            s.deployments.push_back(std::move(sd));
        }
    }
    return s;
}

Scenario load_scenario(const std::filesystem::path& file) {
    return scenario_from_json(read_json_file(file, "scenario"));
}

std::vector<std::string> validate_scenario(const Scenario& s) {
    std::vector<std::string> errors;
    std::set<std::string> ids;
    for (const FleetEntry& f : s.fleet) {
        if (!ids.insert(f.lamppost_id).second) {
            errors.push_back("duplicate lamppost id " + f.lamppost_id);
        }
    }
    if (!(s.propagation_radius_m > 0.0)) {
        errors.push_back("propagation_radius_m must be > 0");
    }
    try {
        validate_profile(s.profile, s.bounds);
    } catch (const ValidationError& e) {
        errors.push_back(e.what());
    }
    for (const auto& [id, events] : s.scene_events) {
        if (!ids.contains(id)) {
            errors.push_back("scene_events for unknown lamppost " + id);
        }
        for (std::size_t i = 0; i < events.size(); ++i) {
            const SceneEvent& e = events[i];
            if (e.sim_time_ms > s.duration_ms) {
                errors.push_back("scene_events." + id + "[" + std::to_string(i) +
                                 "] outside [0, duration_ms]");
            }
            try {
                validate_scene_event(e);
            } catch (const ValidationError& err) {
                errors.push_back("scene_events." + id + "[" + std::to_string(i) + "]: " + err.what());
            }
        }
    }
    try {
        feeds::validate_feed_script(s.feed_script, "feed_script entry");
    } catch (const ValidationError& e) {
        errors.push_back(e.what());
    }
    for (std::size_t i = 0; i < s.feed_script.entries.size(); ++i) {
        if (s.feed_script.entries[i].t_ms > s.duration_ms) {
            errors.push_back("feed_script entry " + std::to_string(i + 1) +
                             " outside [0, duration_ms]");
        }
    }
    for (std::size_t i = 0; i < s.operator_actions.size(); ++i) {
        if (s.operator_actions[i].t_ms > s.duration_ms) {
            errors.push_back("operator_actions[" + std::to_string(i) + "] outside [0, duration_ms]");
        }
    }
    for (std::size_t i = 0; i < s.deployments.size(); ++i) {
        const ScriptedDeployment& d = s.deployments[i];
        if (d.t_ms > s.duration_ms) {
            errors.push_back("deployments[" + std::to_string(i) + "] outside [0, duration_ms]");
        }
        try {
            validate_profile(d.profile, s.bounds);
        } catch (const ValidationError& e) {
            errors.push_back("deployments[" + std::to_string(i) + "]: " + e.what());
        }
    }
    return errors;
}

}  // namespace heimdall::sim
