#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string_view>

#include "heimdall/core/json.hpp"
#include "heimdall/core/profile.hpp"
#include "heimdall/core/types.hpp"

namespace heimdall {

/// A scripted scene occurrence in front of a lamppost camera.
struct SceneEvent {
    std::int64_t sim_time_ms = 0;
    AnomalyClass anomaly = AnomalyClass::traffic_congestion;
    /// false marks a scripted false positive; it flows through unchanged.
    bool true_positive = true;
    double detection_probability = 1.0;
    double confidence_if_detected = 1.0;

    bool operator==(const SceneEvent&) const = default;
};

/// Throws ValidationError for probabilities outside [0,1] or negative time.
void validate_scene_event(const SceneEvent& event);

Json to_json(const SceneEvent& e);
/// Keys: t_ms, anomaly, true_positive (default true), p, confidence.
SceneEvent scene_event_from_json(const Json& j, std::string_view path = {});

struct Detection {
    AnomalyClass anomaly;
    double confidence;

    bool operator==(const Detection&) const = default;
};

/// Pure scripted detection: the class must be enabled, `rng_draw` must fall
/// strictly below the detection probability and the confidence must reach
/// the class threshold.
std::optional<Detection> detect(const SceneEvent& event, const DetectorProfile& profile,
                                double rng_draw);

/// Deterministic uniform source. Seeds derive from a run seed and an identity
/// so each lamppost gets an independent, reproducible stream.
class UnitRng {
public:
    explicit UnitRng(std::uint64_t seed) : engine_(seed) {}

    /// Uniform in [0, 1) with 53 bits of resolution.
    double next();

    static std::uint64_t derive_seed(std::uint64_t run_seed, std::string_view identity) noexcept;

private:
    std::mt19937_64 engine_;
};

/// Slot for a real model. Implementations turn a scene event into at most
/// one detection.
class Detector {
public:
    virtual ~Detector() = default;
    virtual std::optional<Detection> run(const SceneEvent& event, const DetectorProfile& profile) = 0;
};

/// Draws exactly one number per event, whether or not the class is enabled,
/// so the stream stays aligned across profile changes.
class ScriptedDetector final : public Detector {
public:
    explicit ScriptedDetector(std::uint64_t seed) : rng_(seed) {}

    std::optional<Detection> run(const SceneEvent& event, const DetectorProfile& profile) override;

private:
    UnitRng rng_;
};

}  // namespace heimdall
