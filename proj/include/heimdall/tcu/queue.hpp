#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "heimdall/core/json.hpp"
#include "heimdall/core/types.hpp"

namespace heimdall::tcu {

/// Operator-facing queue entry for an active or confirmed alert.
struct Notification {
    std::string alert_id;
    CriticalityIndex varphi;
    std::int64_t created_sim_time_ms = 0;
    AnomalyClass anomaly = AnomalyClass::traffic_congestion;
    std::string lamppost_id;

    bool operator==(const Notification&) const = default;
};

/// Triage order: higher varphi first, then older first, then alert_id.
/// `less` means `a` is served before `b`. Strict total order over distinct
/// alert ids.
std::strong_ordering priority_compare(const Notification& a, const Notification& b) noexcept;

struct PriorityBefore {
    bool operator()(const Notification& a, const Notification& b) const noexcept {
        return priority_compare(a, b) < 0;
    }
};

/// Ordered set of notifications, one per alert id.
class NotificationQueue {
public:
    /// Replaces any existing entry for the same alert.
    void upsert(const Notification& n);
    bool remove(const std::string& alert_id);
    bool contains(const std::string& alert_id) const { return by_id_.contains(alert_id); }

    std::size_t size() const noexcept { return ordered_.size(); }
    bool empty() const noexcept { return ordered_.empty(); }
    const Notification* head() const noexcept {
        return ordered_.empty() ? nullptr : &*ordered_.begin();
    }

    std::vector<Notification> snapshot() const;

private:
    std::set<Notification, PriorityBefore> ordered_;
    std::map<std::string, Notification> by_id_;
};

Json to_json(const Notification& n);

}  // namespace heimdall::tcu
