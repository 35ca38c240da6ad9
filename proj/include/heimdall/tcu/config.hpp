#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "heimdall/core/json.hpp"
#include "heimdall/core/profile.hpp"
#include "heimdall/core/types.hpp"
#include "heimdall/llu/agent.hpp"

namespace heimdall::tcu {

struct TcuConfig {
    CriticalityBounds bounds{5, 10};
    WeightAlpha alpha{0.5};
    double propagation_radius_m = 300.0;
    GlobalRiskIndex preventive_threshold{6};
    std::map<std::string, double> feed_weights;

    std::optional<std::filesystem::path> default_profile_path;
    std::optional<std::filesystem::path> audit_log_path;
    std::optional<std::filesystem::path> registry_dir;
    std::vector<LamppostDescriptor> fleet;

    /// Shipped defaults: N=5, M=10, alpha=0.5, radius 300 m, threshold
    /// ceil(0.6 M), default feed weights, empty fleet.
    static TcuConfig defaults();

    /// Throws ValidationError on out-of-range values.
    void validate() const;
};

/// State-relevant part only (no paths, no fleet); embedded in the audit
/// log so a log can be replayed on its own.
Json to_json(const TcuConfig& c);

/// Parses a config document. Missing keys take defaults; paths resolve
/// relative to `base_dir`.
TcuConfig tcu_config_from_json(const Json& j, const std::filesystem::path& base_dir = {});
TcuConfig load_tcu_config(const std::filesystem::path& file);

/// Profile named by default_profile_path, or the built-in default.
DetectorProfile initial_profile(const TcuConfig& c);

}  // namespace heimdall::tcu
