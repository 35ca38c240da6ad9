#pragma once

#include "heimdall/core/types.hpp"

namespace heimdall {

inline constexpr double kMeanEarthRadiusM = 6'371'000.0;

/// Great-circle distance in metres on a sphere of mean Earth radius.
double haversine_m(const GeoPoint& a, const GeoPoint& b) noexcept;

}  // namespace heimdall
