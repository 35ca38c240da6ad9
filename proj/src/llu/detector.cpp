#include "heimdall/llu/detector.hpp"

#include "heimdall/core/error.hpp"

namespace heimdall {

void validate_scene_event(const SceneEvent& e) {
    if (e.sim_time_ms < 0) {
        throw ValidationError("scene event time must be >= 0", "t_ms");
    }
    if (!(e.detection_probability >= 0.0 && e.detection_probability <= 1.0)) {
        throw ValidationError("detection probability out of range [0, 1]", "p");
    }
    if (!(e.confidence_if_detected >= 0.0 && e.confidence_if_detected <= 1.0)) {
        throw ValidationError("confidence out of range [0, 1]", "confidence");
    }
}

Json to_json(const SceneEvent& e) {
    Json j = Json::object();
    j["t_ms"] = e.sim_time_ms;
    j["anomaly"] = std::string(to_string(e.anomaly));
    j["true_positive"] = e.true_positive;
    j["p"] = e.detection_probability;
    j["confidence"] = e.confidence_if_detected;
    return j;
}

SceneEvent scene_event_from_json(const Json& j, std::string_view path) {
    using namespace json_field;
    require_object(j, path);
    SceneEvent e;
    e.sim_time_ms = get_int_in(j, "t_ms", 0, INT64_MAX / 2, path);
    e.anomaly = anomaly_class_field(j, "anomaly", path);
    if (has(j, "true_positive")) {
        e.true_positive = get_bool(j, "true_positive", path);
    }
    e.detection_probability = get_number_in(j, "p", 0.0, 1.0, path);
    e.confidence_if_detected = get_number_in(j, "confidence", 0.0, 1.0, path);
    return e;
}

std::optional<Detection> detect(const SceneEvent& event, const DetectorProfile& profile,
                                double rng_draw) {
    if (!profile.enabled_classes.contains(event.anomaly)) {
        return std::nullopt;
    }
    if (!(rng_draw < event.detection_probability)) {
        return std::nullopt;
    }
    const auto threshold = profile.confidence_threshold.find(event.anomaly);
    if (threshold == profile.confidence_threshold.end() ||
        event.confidence_if_detected < threshold->second) {
        return std::nullopt;
    }
    return Detection{event.anomaly, event.confidence_if_detected};
}

double UnitRng::next() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

std::uint64_t UnitRng::derive_seed(std::uint64_t run_seed, std::string_view identity) noexcept {
    // FNV-1a over the identity, then one splitmix64 round over the mix.
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const char c : identity) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    std::uint64_t z = run_seed ^ h;
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

std::optional<Detection> ScriptedDetector::run(const SceneEvent& event,
                                               const DetectorProfile& profile) {
    const double draw = rng_.next();
    return detect(event, profile, draw);
}

}  // namespace heimdall
