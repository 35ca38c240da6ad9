#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "heimdall/core/json.hpp"
#include "heimdall/core/types.hpp"

namespace heimdall {

/// Deployable detection configuration. Stands in for a trained model on the
/// lamppost: which classes are reported, the confidence cut per class, and
/// the base criticality assigned to each class.
struct DetectorProfile {
    int version = 1;
    std::set<AnomalyClass> enabled_classes;
    std::map<AnomalyClass, double> confidence_threshold;
    std::map<AnomalyClass, CriticalityIndex> base_criticality_table;

    bool operator==(const DetectorProfile&) const = default;
};

/// Classes with no base-criticality entry, in enumeration order.
std::vector<AnomalyClass> missing_base_criticality(const DetectorProfile& profile);

/// Throws ValidationError listing every problem: incomplete table, enabled
/// classes without a threshold, thresholds outside [0, 1], and (when
/// `bounds` is given) table entries above n_max.
void validate_profile(const DetectorProfile& profile,
                      const std::optional<CriticalityBounds>& bounds = std::nullopt);

/// Built-in profile for n_max = 5: every class enabled, threshold 0.5.
DetectorProfile default_detector_profile();

/// Profile file JSON: {"version", "enabled_classes", "thresholds",
/// "base_criticality"}. `version` is written as assigned; on input it is
/// read when present, otherwise left at 1.
Json to_json(const DetectorProfile& profile);
DetectorProfile detector_profile_from_json(const Json& j, std::string_view path = {});
DetectorProfile load_detector_profile(const std::filesystem::path& file);

}  // namespace heimdall
