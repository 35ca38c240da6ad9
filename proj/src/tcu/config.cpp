#include "heimdall/tcu/config.hpp"

#include <cmath>
#include <set>

#include "heimdall/core/error.hpp"
#include "heimdall/risk/risk_engine.hpp"
#include "heimdall/tcu/propagation.hpp"

namespace heimdall::tcu {

TcuConfig TcuConfig::defaults() {
    TcuConfig c;
    c.preventive_threshold = default_preventive_threshold(c.bounds);
    c.feed_weights = risk::default_feed_weights();
    return c;
}

void TcuConfig::validate() const {
    if (!(propagation_radius_m > 0.0) || !std::isfinite(propagation_radius_m)) {
        throw ValidationError("propagation_radius_m must be > 0", "propagation_radius_m");
    }
    if (!preventive_threshold.fits(bounds)) {
        throw ValidationError("preventive_threshold must be in [0, m_max]", "preventive_threshold");
    }
    for (const auto& [source, w] : feed_weights) {
        if (!(w >= 0.0 && w <= 1.0)) {
            throw ValidationError("feed weight for " + source + " out of range [0, 1]",
                                  "feed_weights");
        }
    }
    std::set<std::string> ids;
    for (const LamppostDescriptor& d : fleet) {
        if (!ids.insert(d.lamppost_id).second) {
            throw ValidationError("duplicate lamppost id " + d.lamppost_id, "fleet");
        }
    }
}

Json to_json(const TcuConfig& c) {
    Json j = Json::object();
    j["n_max"] = c.bounds.n_max();
    j["m_max"] = c.bounds.m_max();
    j["alpha"] = c.alpha.value();
    j["propagation_radius_m"] = c.propagation_radius_m;
    j["preventive_threshold"] = c.preventive_threshold.value();
    Json weights = Json::object();
    for (const auto& [source, w] : c.feed_weights) {
        weights[source] = w;
    }
    j["feed_weights"] = std::move(weights);
    return j;
}

TcuConfig tcu_config_from_json(const Json& j, const std::filesystem::path& base_dir) {
    using namespace json_field;
    require_object(j, "");
    TcuConfig c = TcuConfig::defaults();
    const int n_max = has(j, "n_max") ? static_cast<int>(get_int_in(j, "n_max", 1, 1'000'000))
                                      : c.bounds.n_max();
    const int m_max = has(j, "m_max") ? static_cast<int>(get_int_in(j, "m_max", 1, 1'000'000))
                                      : c.bounds.m_max();
    c.bounds = CriticalityBounds(n_max, m_max);
    c.preventive_threshold = default_preventive_threshold(c.bounds);
    if (has(j, "alpha")) {
        c.alpha = WeightAlpha(get_number_in(j, "alpha", 0.0, 1.0));
    }
    if (has(j, "propagation_radius_m")) {
        c.propagation_radius_m = get_number(j, "propagation_radius_m");
    }
    if (has(j, "preventive_threshold")) {
        c.preventive_threshold =
            GlobalRiskIndex(static_cast<int>(get_int_in(j, "preventive_threshold", 0, m_max)));
    }
    if (has(j, "feed_weights")) {
        const Json& w = j.at("feed_weights");
        require_object(w, "feed_weights");
        for (const auto& [source, value] : w.items()) {
            c.feed_weights[source] = get_number_in(w, source, 0.0, 1.0, "feed_weights");
        }
    }
    const auto resolve = [&](const std::string& p) {
        std::filesystem::path path(p);
        return path.is_absolute() || base_dir.empty() ? path : base_dir / path;
    };
    if (has(j, "default_profile_path")) {
        c.default_profile_path = resolve(get_string(j, "default_profile_path"));
    }
    if (has(j, "audit_log_path")) {
        c.audit_log_path = resolve(get_string(j, "audit_log_path"));
    }
    if (has(j, "registry_dir")) {
        c.registry_dir = resolve(get_string(j, "registry_dir"));
    }
    if (has(j, "fleet")) {
        const Json& fleet = j.at("fleet");
        if (!fleet.is_array()) {
            throw ProtocolError("fleet: expected array", "fleet");
        }
        for (std::size_t i = 0; i < fleet.size(); ++i) {
            c.fleet.push_back(lamppost_from_json(fleet[i], "fleet[" + std::to_string(i) + "]"));
        }
    }
    c.validate();
    return c;
}

TcuConfig load_tcu_config(const std::filesystem::path& file) {
    return tcu_config_from_json(read_json_file(file, "config"), file.parent_path());
}

DetectorProfile initial_profile(const TcuConfig& c) {
    DetectorProfile p = c.default_profile_path ? load_detector_profile(*c.default_profile_path)
                                               : default_detector_profile();
    validate_profile(p, c.bounds);
    return p;
}

}  // namespace heimdall::tcu
