#pragma once

#include <map>
#include <string>
#include <vector>

#include "heimdall/core/types.hpp"
#include "heimdall/llu/agent.hpp"

namespace heimdall::tcu {

/// Lampposts known to the TCU, keyed by id. Positions are fixed once added;
/// only signalling and profile version change.
class FleetIndex {
public:
    FleetIndex() = default;
    explicit FleetIndex(const std::vector<LamppostDescriptor>& lampposts);

    /// Throws ValidationError on a duplicate id.
    void add(LamppostDescriptor descriptor);

    bool contains(const std::string& id) const { return lampposts_.contains(id); }
    /// Throws NotFoundError.
    const LamppostDescriptor& at(const std::string& id) const;
    std::size_t size() const noexcept { return lampposts_.size(); }

    void set_signalling(const std::string& id, const SignallingState& state);
    void set_profile_version(const std::string& id, int version);

    const std::map<std::string, LamppostDescriptor>& lampposts() const noexcept { return lampposts_; }
    std::vector<std::string> ids() const;

private:
    std::map<std::string, LamppostDescriptor> lampposts_;
};

struct Neighbor {
    std::string lamppost_id;
    double distance_m;
};

/// Lampposts within `radius_m` (inclusive) of `origin` by haversine
/// distance, excluding `exclude`, sorted by distance then id.
/// Throws ValidationError unless radius_m > 0.
std::vector<Neighbor> neighbors_with_distance(const GeoPoint& origin, const FleetIndex& fleet,
                                              double radius_m, const std::string& exclude);

std::vector<std::string> neighbors_within(const GeoPoint& origin, const FleetIndex& fleet,
                                          double radius_m, const std::string& exclude);

}  // namespace heimdall::tcu
