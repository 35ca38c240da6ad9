#include "heimdall/net/clients.hpp"

#include "heimdall/core/error.hpp"

namespace heimdall::net {

using protocol::Envelope;
using protocol::MessageType;

PeerLink::PeerLink(const Address& tcu, Handler on_message, std::chrono::milliseconds ack_timeout)
    : stream_(connect_tcp(tcu)), on_message_(std::move(on_message)), ack_timeout_(ack_timeout) {
    reader_ = std::thread([this] { read_loop(); });
}

PeerLink::~PeerLink() {
    close();
}

bool PeerLink::send(const Envelope& envelope) {
    return stream_.send(envelope);
}

std::optional<protocol::AckPayload> PeerLink::await_ack(MessageType of, std::uint64_t seq) {
    std::unique_lock lock(mu_);
    const auto key = std::pair{of, seq};
    cv_.wait_for(lock, ack_timeout_, [&] { return acks_.contains(key) || !open_; });
    const auto it = acks_.find(key);
    if (it == acks_.end()) {
        return std::nullopt;
    }
    protocol::AckPayload ack = it->second;
    acks_.erase(it);
    return ack;
}

std::optional<protocol::AckPayload> PeerLink::request(const Envelope& envelope) {
    if (!send(envelope)) {
        return std::nullopt;
    }
    return await_ack(envelope.type, envelope.seq);
}

bool PeerLink::connected() const {
    std::lock_guard lock(mu_);
    return open_;
}

void PeerLink::close() {
    stream_.shutdown();
    if (reader_.joinable()) {
        reader_.join();
    }
}

void PeerLink::read_loop() {
    while (auto frame = stream_.read_frame()) {
        Envelope env;
        try {
            env = protocol::decode(*frame);
        } catch (const ProtocolError&) {
            continue;
        }
        if (env.type == MessageType::ack) {
            const protocol::AckPayload ack = protocol::ack_of(env);
            {
                std::lock_guard lock(mu_);
                acks_[{ack.ack_of, ack.ref_seq}] = ack;
            }
            cv_.notify_all();
        } else if (on_message_) {
            on_message_(env);
        }
    }
    {
        std::lock_guard lock(mu_);
        open_ = false;
    }
    cv_.notify_all();
}

LluClient::LluClient(std::unique_ptr<LluAgent> agent, const Address& tcu,
                     std::chrono::milliseconds ack_timeout)
    : agent_(std::move(agent)) {
    link_ = std::make_unique<PeerLink>(
        tcu, [this](const Envelope& env) { on_message(env); }, ack_timeout);
}

bool LluClient::hello(std::int64_t now_ms) {
    std::uint64_t seq = 0;
    {
        std::lock_guard lock(agent_mu_);
        const Envelope hb = agent_->heartbeat(now_ms);
        seq = hb.seq;
        if (!link_->send(hb)) {
            return false;
        }
    }
    return link_->await_ack(MessageType::heartbeat, seq).has_value();
}

LluClient::SceneOutcome LluClient::scene(const SceneEvent& event) {
    SceneOutcome out;
    std::uint64_t seq = 0;
    {
        std::lock_guard lock(agent_mu_);
        const auto report = agent_->on_scene_event(event);
        if (!report) {
            return out;
        }
        out.reported = true;
        seq = report->seq;
        if (!link_->send(*report)) {
            return out;
        }
    }
    out.ack = link_->await_ack(MessageType::report, seq);
    return out;
}

void LluClient::on_message(const Envelope& env) {
    std::lock_guard lock(agent_mu_);
    if (env.type == MessageType::command) {
        ++commands_;
    }
    if (const auto reply = agent_->on_message(env)) {
        link_->send(*reply);
    }
}

LamppostDescriptor LluClient::descriptor() const {
    std::lock_guard lock(agent_mu_);
    return agent_->descriptor();
}

std::uint64_t LluClient::reports_emitted() const {
    std::lock_guard lock(agent_mu_);
    return agent_->reports_emitted();
}

std::uint64_t LluClient::commands_received() const {
    std::lock_guard lock(agent_mu_);
    return commands_;
}

}  // namespace heimdall::net
