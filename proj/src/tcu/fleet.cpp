#include "heimdall/tcu/fleet.hpp"

#include <algorithm>
#include <cmath>

#include "heimdall/core/error.hpp"
#include "heimdall/core/geo.hpp"

namespace heimdall::tcu {

FleetIndex::FleetIndex(const std::vector<LamppostDescriptor>& lampposts) {
    for (const LamppostDescriptor& d : lampposts) {
        add(d);
    }
}

void FleetIndex::add(LamppostDescriptor descriptor) {
    const std::string id = descriptor.lamppost_id;
    if (!lampposts_.emplace(id, std::move(descriptor)).second) {
        throw ValidationError("duplicate lamppost id " + id, "fleet");
    }
}

const LamppostDescriptor& FleetIndex::at(const std::string& id) const {
    const auto it = lampposts_.find(id);
    if (it == lampposts_.end()) {
        throw NotFoundError("unknown lamppost " + id);
    }
    return it->second;
}

void FleetIndex::set_signalling(const std::string& id, const SignallingState& state) {
    const auto it = lampposts_.find(id);
    if (it == lampposts_.end()) {
        throw NotFoundError("unknown lamppost " + id);
    }
    it->second.signalling = state;
}

void FleetIndex::set_profile_version(const std::string& id, int version) {
    const auto it = lampposts_.find(id);
    if (it == lampposts_.end()) {
        throw NotFoundError("unknown lamppost " + id);
    }
    it->second.active_profile_version = version;
}

std::vector<std::string> FleetIndex::ids() const {
    std::vector<std::string> out;
    out.reserve(lampposts_.size());
    for (const auto& [id, _] : lampposts_) {
        out.push_back(id);
    }
    return out;
}

std::vector<Neighbor> neighbors_with_distance(const GeoPoint& origin, const FleetIndex& fleet,
                                              double radius_m, const std::string& exclude) {
    if (!(radius_m > 0.0) || !std::isfinite(radius_m)) {
        throw ValidationError("radius_m must be > 0", "radius_m");
    }
    std::vector<Neighbor> out;
    for (const auto& [id, d] : fleet.lampposts()) {
        if (id == exclude) {
            continue;
        }
        const double dist = haversine_m(origin, d.position);
        if (dist <= radius_m) {
            out.push_back({id, dist});
        }
    }
    std::sort(out.begin(), out.end(), [](const Neighbor& a, const Neighbor& b) {
        if (a.distance_m != b.distance_m) {
            return a.distance_m < b.distance_m;
        }
        return a.lamppost_id < b.lamppost_id;
    });
    return out;
}

std::vector<std::string> neighbors_within(const GeoPoint& origin, const FleetIndex& fleet,
                                          double radius_m, const std::string& exclude) {
    std::vector<std::string> ids;
    for (Neighbor& n : neighbors_with_distance(origin, fleet, radius_m, exclude)) {
        ids.push_back(std::move(n.lamppost_id));
    }
    return ids;
}

}  // namespace heimdall::tcu
