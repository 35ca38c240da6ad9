#include "heimdall/tcu/queue.hpp"

namespace heimdall::tcu {

std::strong_ordering priority_compare(const Notification& a, const Notification& b) noexcept {
    if (const auto c = b.varphi.value() <=> a.varphi.value(); c != 0) {
        return c;
    }
    if (const auto c = a.created_sim_time_ms <=> b.created_sim_time_ms; c != 0) {
        return c;
    }
    return a.alert_id <=> b.alert_id;
}

void NotificationQueue::upsert(const Notification& n) {
    remove(n.alert_id);
    ordered_.insert(n);
    by_id_.emplace(n.alert_id, n);
}

bool NotificationQueue::remove(const std::string& alert_id) {
    const auto it = by_id_.find(alert_id);
    if (it == by_id_.end()) {
        return false;
    }
    ordered_.erase(it->second);
    by_id_.erase(it);
    return true;
}

std::vector<Notification> NotificationQueue::snapshot() const {
    return {ordered_.begin(), ordered_.end()};
}

Json to_json(const Notification& n) {
    Json j = Json::object();
    j["alert_id"] = n.alert_id;
    j["varphi"] = n.varphi.value();
    j["created_sim_time_ms"] = n.created_sim_time_ms;
    j["anomaly"] = std::string(to_string(n.anomaly));
    j["lamppost_id"] = n.lamppost_id;
    return j;
}

}  // namespace heimdall::tcu
