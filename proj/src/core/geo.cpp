#include "heimdall/core/geo.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace heimdall {

double haversine_m(const GeoPoint& a, const GeoPoint& b) noexcept {
    constexpr double to_rad = std::numbers::pi / 180.0;
    const double lat1 = a.lat * to_rad;
    const double lat2 = b.lat * to_rad;
    const double sin_dlat = std::sin((b.lat - a.lat) * to_rad / 2.0);
    const double sin_dlon = std::sin((b.lon - a.lon) * to_rad / 2.0);
    const double h = sin_dlat * sin_dlat + std::cos(lat1) * std::cos(lat2) * sin_dlon * sin_dlon;
    return 2.0 * kMeanEarthRadiusM * std::asin(std::min(1.0, std::sqrt(h)));
}

}  // namespace heimdall
