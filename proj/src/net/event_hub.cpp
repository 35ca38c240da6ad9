#include "heimdall/net/event_hub.hpp"

#include <algorithm>

namespace heimdall::net {

std::optional<HubEvent> EventHub::Subscription::next(std::chrono::milliseconds timeout) {
    std::unique_lock lock(mu_);
    cv_.wait_for(lock, timeout, [&] { return !queue_.empty() || closed_; });
    if (queue_.empty()) {
        return std::nullopt;
    }
    HubEvent e = std::move(queue_.front());
    queue_.pop_front();
    return e;
}

bool EventHub::Subscription::closed() const {
    std::lock_guard lock(mu_);
    return closed_ && queue_.empty();
}

std::uint64_t EventHub::Subscription::dropped() const {
    std::lock_guard lock(mu_);
    return dropped_;
}

EventHub::~EventHub() {
    close();
}

std::shared_ptr<EventHub::Subscription> EventHub::subscribe() {
    auto sub = std::make_shared<Subscription>();
    sub->capacity_ = capacity_;
    std::lock_guard lock(mu_);
    sub->closed_ = closed_;
    if (!closed_) {
        subs_.push_back(sub);
    }
    return sub;
}

void EventHub::unsubscribe(const std::shared_ptr<Subscription>& sub) {
    std::lock_guard lock(mu_);
    std::erase(subs_, sub);
}

void EventHub::publish(std::string type, Json data) {
    std::lock_guard lock(mu_);
    if (closed_) {
        return;
    }
    const HubEvent e{++next_id_, std::move(type), std::move(data)};
    for (const auto& sub : subs_) {
        {
            std::lock_guard sub_lock(sub->mu_);
            if (sub->queue_.size() >= sub->capacity_) {
                sub->queue_.pop_front();
                ++sub->dropped_;
            }
            sub->queue_.push_back(e);
        }
        sub->cv_.notify_one();
    }
}

void EventHub::close() {
    std::vector<std::shared_ptr<Subscription>> subs;
    {
        std::lock_guard lock(mu_);
        closed_ = true;
        subs.swap(subs_);
    }
    for (const auto& sub : subs) {
        {
            std::lock_guard sub_lock(sub->mu_);
            sub->closed_ = true;
        }
        sub->cv_.notify_all();
    }
}

std::size_t EventHub::subscriber_count() const {
    std::lock_guard lock(mu_);
    return subs_.size();
}

std::uint64_t EventHub::published() const {
    std::lock_guard lock(mu_);
    return next_id_;
}

std::string sse_frame(const HubEvent& e) {
    const Json body{{"type", e.type}, {"data", e.data}};
    return "id: " + std::to_string(e.id) + "\nevent: " + e.type + "\ndata: " + body.dump() + "\n\n";
}

}  // namespace heimdall::net
