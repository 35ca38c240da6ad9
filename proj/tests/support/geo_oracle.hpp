#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "heimdall/core/types.hpp"
#include "heimdall/tcu/fleet.hpp"

namespace heimdall::testing {

/// Great-circle distance through the 3D chord between the two points, an
/// independent route to the same sphere distance as the haversine formula.
inline double chord_distance_m(const GeoPoint& a, const GeoPoint& b) {
    constexpr double r = 6'371'000.0;
    constexpr double deg = std::numbers::pi / 180.0;
    const auto xyz = [&](const GeoPoint& p) {
        const double la = p.lat * deg;
        const double lo = p.lon * deg;
        return std::array<double, 3>{std::cos(la) * std::cos(lo), std::cos(la) * std::sin(lo),
                                     std::sin(la)};
    };
    const auto pa = xyz(a);
    const auto pb = xyz(b);
    const double dx = pa[0] - pb[0];
    const double dy = pa[1] - pb[1];
    const double dz = pa[2] - pb[2];
    const double chord = std::sqrt(dx * dx + dy * dy + dz * dz);
    return 2.0 * r * std::asin(std::min(1.0, chord / 2.0));
}

/// Random fleet of up to `max_size` lampposts inside a box of `box_m` metres
/// around a random origin.
inline std::vector<LamppostDescriptor> random_fleet(std::mt19937_64& rng, std::size_t max_size,
                                                    double box_m) {
    std::uniform_real_distribution<double> lat0(-60.0, 60.0);
    std::uniform_real_distribution<double> lon0(-170.0, 170.0);
    std::uniform_real_distribution<double> offset(0.0, box_m);
    std::uniform_int_distribution<std::size_t> size(1, max_size);
    const double base_lat = lat0(rng);
    const double base_lon = lon0(rng);
    const double m_per_deg_lat = 6'371'000.0 * std::numbers::pi / 180.0;
    const double m_per_deg_lon = m_per_deg_lat * std::cos(base_lat * std::numbers::pi / 180.0);
    std::vector<LamppostDescriptor> fleet;
    const std::size_t n = size(rng);
    for (std::size_t i = 0; i < n; ++i) {
        LamppostDescriptor d;
        d.lamppost_id = "L" + std::to_string(i);
        d.position = GeoPoint::make(base_lat + offset(rng) / m_per_deg_lat,
                                    base_lon + offset(rng) / m_per_deg_lon);
        fleet.push_back(std::move(d));
    }
    return fleet;
}

struct NeighborCheck {
    bool ok = true;
    std::string detail;
};

/// Compares neighbors_within against the O(n^2) chord oracle. Pairs whose
/// oracle distance lies within `tolerance_m` of the radius may fall either way.
inline NeighborCheck check_neighbors(const tcu::FleetIndex& fleet, double radius_m,
                                     double tolerance_m) {
    for (const auto& [id, origin] : fleet.lampposts()) {
        const auto got = tcu::neighbors_within(origin.position, fleet, radius_m, id);
        for (const auto& [other_id, other] : fleet.lampposts()) {
            if (other_id == id) {
                if (std::find(got.begin(), got.end(), id) != got.end()) {
                    return {false, "origin " + id + " included itself"};
                }
                continue;
            }
            const double d = chord_distance_m(origin.position, other.position);
            const bool included = std::find(got.begin(), got.end(), other_id) != got.end();
            if (std::abs(d - radius_m) <= tolerance_m) {
                continue;
            }
            if (included != (d <= radius_m)) {
                return {false, "origin " + id + " neighbour " + other_id + " at " +
                                   std::to_string(d) + " m, radius " + std::to_string(radius_m)};
            }
        }
    }
    return {};
}

}  // namespace heimdall::testing
