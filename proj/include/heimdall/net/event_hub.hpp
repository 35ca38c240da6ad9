#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "heimdall/core/json.hpp"

namespace heimdall::net {

struct HubEvent {
    std::uint64_t id = 0;
    std::string type;
    Json data;
};

/// Fan-out of TCU events to dashboard subscribers. Publishing never blocks:
/// each subscriber has a bounded queue and a slow one loses its oldest
/// events (counted in `dropped`).
class EventHub {
public:
    class Subscription {
    public:
        /// Waits up to `timeout` for the next event. nullopt on timeout or
        /// once the hub is closed and drained.
        std::optional<HubEvent> next(std::chrono::milliseconds timeout);
        bool closed() const;
        std::uint64_t dropped() const;

    private:
        friend class EventHub;
        mutable std::mutex mu_;
        std::condition_variable cv_;
        std::deque<HubEvent> queue_;
        std::size_t capacity_ = 0;
        std::uint64_t dropped_ = 0;
        bool closed_ = false;
    };

    explicit EventHub(std::size_t per_subscriber_capacity = 4096)
        : capacity_(per_subscriber_capacity) {}
    ~EventHub();

    std::shared_ptr<Subscription> subscribe();
    void unsubscribe(const std::shared_ptr<Subscription>& sub);
    void publish(std::string type, Json data);
    /// Wakes and closes every subscriber; later subscriptions start closed.
    void close();

    std::size_t subscriber_count() const;
    std::uint64_t published() const;

private:
    mutable std::mutex mu_;
    std::vector<std::shared_ptr<Subscription>> subs_;
    std::size_t capacity_;
    std::uint64_t next_id_ = 0;
    bool closed_ = false;
};

/// Server-sent-events frame: "id:", "event:" and a single "data:" line
/// holding {"type","data"} as JSON.
std::string sse_frame(const HubEvent& e);

}  // namespace heimdall::net
