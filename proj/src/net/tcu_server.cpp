#include "heimdall/net/tcu_server.hpp"

#include <httplib.h>

#include <algorithm>
#include <atomic>
#include <climits>
#include <condition_variable>
#include <deque>
#include <map>
#include <mutex>
#include <set>
#include <thread>

#include "heimdall/core/error.hpp"
#include "heimdall/protocol/audit_log.hpp"
#include "heimdall/registry/model_registry.hpp"
#include "heimdall/tcu/gateway.hpp"
#include "heimdall/tcu/tcu.hpp"

namespace heimdall::net {

namespace {

using protocol::Envelope;

/// One stream peer. The writer thread drains `outbox` so a slow peer never
/// stalls the TCU lock.
class Connection {
public:
    explicit Connection(Socket socket) : stream(std::move(socket)) {}

    void enqueue(std::string frame) {
        {
            std::lock_guard lock(mu_);
            if (closed_) {
                return;
            }
            outbox_.push_back(std::move(frame));
        }
        cv_.notify_one();
    }

    void writer_loop() {
        while (true) {
            std::string frame;
            {
                std::unique_lock lock(mu_);
                cv_.wait(lock, [&] { return closed_ || !outbox_.empty(); });
                if (outbox_.empty()) {
                    return;
                }
                frame = std::move(outbox_.front());
                outbox_.pop_front();
            }
            if (!stream.send_raw(frame)) {
                close();
                return;
            }
        }
    }

    /// Stops accepting frames; the writer flushes what is queued and exits.
    void close() {
        {
            std::lock_guard lock(mu_);
            closed_ = true;
        }
        cv_.notify_all();
    }

    FrameStream stream;
    std::thread reader;
    std::thread writer;
    std::atomic<bool> finished{false};

private:
    std::mutex mu_;
    std::condition_variable cv_;
    std::deque<std::string> outbox_;
    bool closed_ = false;
};

Json error_body(const std::string& message) {
    return Json{{"error", message}};
}

void reply(httplib::Response& res, int status, const Json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

}  // namespace

class TcuServer::Impl {
public:
    explicit Impl(ServerOptions options)
        : options_(std::move(options)),
          log_(options_.config.audit_log_path ? std::make_unique<protocol::AuditLog>(
                                                    *options_.config.audit_log_path)
                                              : std::make_unique<protocol::AuditLog>()),
          tcu_(options_.config, *log_),
          gateway_(tcu_),
          registry_(options_.config.registry_dir ? registry::ModelRegistry(*options_.config.registry_dir)
                                                 : registry::ModelRegistry()) {
        if (registry_.latest_version() == 0) {
            registry_.register_profile(options_.initial_profile, options_.config.bounds);
        }
        tcu_.set_event_listener([this](const tcu::TcuEvent& e) { hub_.publish(e.type, e.data); });
        gateway_.set_profile_ack_handler(
            [this](const std::string& lamppost, const protocol::AckPayload& ack) {
                on_profile_ack(lamppost, ack);
            });
    }

    ~Impl() { stop(); }

    void start() {
        listener_ = listen_tcp(options_.listen);
        stream_port_ = local_port(listener_);
        accept_thread_ = std::thread([this] { accept_loop(); });
        if (options_.http) {
            install_routes();
            const Address& a = *options_.http;
            if (a.port == 0) {
                const int port = http_.bind_to_any_port(a.host);
                if (port < 0) {
                    throw Error("cannot bind HTTP on " + a.to_string());
                }
                http_port_ = static_cast<std::uint16_t>(port);
            } else {
                if (!http_.bind_to_port(a.host, a.port)) {
                    throw Error("cannot bind HTTP on " + a.to_string());
                }
                http_port_ = a.port;
            }
            http_thread_ = std::thread([this] { http_.listen_after_bind(); });
        }
    }

    void stop() {
        {
            std::lock_guard lock(stop_mu_);
            if (stopped_) {
                return;
            }
            stopped_ = true;
        }
        stop_cv_.notify_all();
        hub_.close();
        if (http_thread_.joinable()) {
            http_.stop();
            http_thread_.join();
        }
        listener_.shutdown();
        if (accept_thread_.joinable()) {
            accept_thread_.join();
        }
        std::vector<std::shared_ptr<Connection>> conns;
        {
            std::lock_guard lock(conn_mu_);
            conns.swap(connections_);
        }
        for (const auto& c : conns) {
            c->stream.shutdown();
            c->close();
        }
        for (const auto& c : conns) {
            join(*c);
        }
    }

    void wait() {
        std::unique_lock lock(stop_mu_);
        stop_cv_.wait(lock, [&] { return stopped_; });
    }

    Json snapshot() const {
        std::lock_guard lock(state_mu_);
        return tcu_.snapshot();
    }

    std::string audit_text() const {
        std::lock_guard lock(state_mu_);
        return log_->text();
    }

    std::vector<std::string> diagnostics() const {
        std::lock_guard lock(state_mu_);
        std::vector<std::string> all = gateway_.diagnostics();
        all.insert(all.end(), diagnostics_.begin(), diagnostics_.end());
        return all;
    }

    std::size_t open_connections() const {
        std::lock_guard lock(conn_mu_);
        std::size_t n = 0;
        for (const auto& c : connections_) {
            n += c->finished ? 0 : 1;
        }
        return n;
    }

    int register_profile(const DetectorProfile& profile) {
        std::lock_guard lock(registry_mu_);
        return registry_.register_profile(profile, options_.config.bounds);
    }

    Json deploy(int version, const std::vector<std::string>& targets,
                std::optional<std::int64_t> at = std::nullopt) {
        std::lock_guard lock(registry_mu_);
        std::int64_t now = 0;
        {
            std::lock_guard state(state_mu_);
            now = std::max(tcu_.clock_ms(), at.value_or(0));
        }
        LiveDeployChannel channel(*this);
        return registry::to_json(registry_.deploy(version, targets, channel, now));
    }

    std::uint16_t stream_port_ = 0;
    std::uint16_t http_port_ = 0;
    EventHub hub_;

private:
    /// Sends PROFILE_DEPLOY to a connected LLU and waits for the matching
    /// ACK, which arrives through the gateway on the LLU's reader thread.
    class LiveDeployChannel final : public registry::DeployChannel {
    public:
        explicit LiveDeployChannel(Impl& server) : server_(server) {}

        bool knows(const std::string& lamppost_id) const override {
            std::lock_guard lock(server_.state_mu_);
            return server_.routes_.contains(llu_sender(lamppost_id));
        }

        std::optional<protocol::AckPayload> deliver(const std::string& lamppost_id,
                                                    const Envelope& deploy) override {
            std::unique_lock lock(server_.ack_mu_);
            server_.acks_.erase(lamppost_id);
            server_.awaiting_[lamppost_id] = deploy.seq;
            lock.unlock();
            {
                std::lock_guard state(server_.state_mu_);
                server_.route_locked(llu_sender(lamppost_id), protocol::encode(deploy));
            }
            lock.lock();
            const bool answered = server_.ack_cv_.wait_for(
                lock, server_.options_.deploy_timeout, [&] { return server_.acks_.contains(lamppost_id); });
            server_.awaiting_.erase(lamppost_id);
            if (!answered) {
                return std::nullopt;
            }
            protocol::AckPayload ack = server_.acks_.at(lamppost_id);
            server_.acks_.erase(lamppost_id);
            return ack;
        }

    private:
        Impl& server_;
    };

    void on_profile_ack(const std::string& lamppost, const protocol::AckPayload& ack) {
        {
            std::lock_guard lock(ack_mu_);
            const auto it = awaiting_.find(lamppost);
            if (it == awaiting_.end() || it->second != ack.ref_seq) {
                return;
            }
            acks_[lamppost] = ack;
        }
        ack_cv_.notify_all();
    }

    void accept_loop() {
        while (true) {
            Socket s = accept_tcp(listener_);
            if (!s.valid()) {
                return;
            }
            auto conn = std::make_shared<Connection>(std::move(s));
            std::lock_guard lock(conn_mu_);
            if (stopped_flag()) {
                conn->stream.shutdown();
                return;
            }
            std::erase_if(connections_, [this](const std::shared_ptr<Connection>& c) {
                if (c->finished) {
                    join(*c);
                    return true;
                }
                return false;
            });
            conn->writer = std::thread([conn] { conn->writer_loop(); });
            conn->reader = std::thread([this, conn] { read_loop(conn); });
            connections_.push_back(std::move(conn));
        }
    }

    bool stopped_flag() {
        std::lock_guard lock(stop_mu_);
        return stopped_;
    }

    static void join(Connection& c) {
        if (c.reader.joinable()) {
            c.reader.join();
        }
        if (c.writer.joinable()) {
            c.writer.join();
        }
    }

    void read_loop(const std::shared_ptr<Connection>& conn) {
        std::set<std::string> senders;
        while (auto frame = conn->stream.read_frame()) {
            Envelope env;
            try {
                env = protocol::decode(*frame);
            } catch (const ProtocolError& e) {
                diagnose(std::string("rejected frame: ") + e.what());
                continue;
            }
            std::lock_guard lock(state_mu_);
            routes_[env.sender] = conn;
            senders.insert(env.sender);
            try {
                for (const tcu::Outbound& out : gateway_.handle(env)) {
                    route_locked(out.destination, protocol::encode(out.envelope));
                }
            } catch (const Error& e) {
                diagnostics_.push_back("cannot apply " + std::string(protocol::to_string(env.type)) +
                                       " from " + env.sender + ": " + e.what());
                log_line(diagnostics_.back());
            }
        }
        {
            std::lock_guard lock(state_mu_);
            for (const std::string& s : senders) {
                const auto it = routes_.find(s);
                if (it != routes_.end() && it->second == conn) {
                    routes_.erase(it);
                }
            }
        }
        conn->close();
        conn->finished = true;
    }

    void route_locked(const std::string& destination, std::string frame) {
        const auto it = routes_.find(destination);
        if (it == routes_.end()) {
            diagnostics_.push_back("no connection for " + destination);
            log_line(diagnostics_.back());
            return;
        }
        it->second->enqueue(std::move(frame));
    }

    void flush_locked() {
        for (const tcu::Outbound& out : gateway_.flush_commands(tcu_.clock_ms())) {
            route_locked(out.destination, protocol::encode(out.envelope));
        }
    }

    void diagnose(const std::string& line) {
        std::lock_guard lock(state_mu_);
        diagnostics_.push_back(line);
        log_line(line);
    }

    void log_line(const std::string& line) const {
        if (options_.log) {
            options_.log(line);
        }
    }

    template <class F>
    void guarded(httplib::Response& res, F&& body) {
        try {
            body();
        } catch (const NotFoundError& e) {
            reply(res, 404, error_body(e.what()));
        } catch (const ConflictError& e) {
            Json j = error_body(e.what());
            j["current_state"] = e.current_state();
            reply(res, 409, j);
        } catch (const ValidationError& e) {
            Json j = error_body(e.what());
            j["field"] = e.field();
            reply(res, 400, j);
        } catch (const ProtocolError& e) {
            Json j = error_body(e.what());
            j["field"] = e.field();
            reply(res, 400, j);
        } catch (const Json::exception& e) {
            reply(res, 400, error_body(std::string("malformed JSON: ") + e.what()));
        } catch (const std::exception& e) {
            reply(res, 500, error_body(e.what()));
        }
    }

    /// Optional "sim_time_ms" in a request body; never earlier than the
    /// TCU clock.
    std::int64_t request_time_locked(const Json& body) const {
        if (!json_field::has(body, "sim_time_ms")) {
            return tcu_.clock_ms();
        }
        return std::max(tcu_.clock_ms(), json_field::get_int_in(body, "sim_time_ms", 0, INT64_MAX));
    }

    static Json parse_body(const httplib::Request& req) {
        if (req.body.empty()) {
            return Json::object();
        }
        Json j = Json::parse(req.body);
        if (!j.is_object()) {
            throw ValidationError("request body must be a JSON object", "body");
        }
        return j;
    }

    void install_routes() {
        using httplib::Request;
        using httplib::Response;

        http_.Get("/api/v1/health", [this](const Request&, Response& res) {
            std::lock_guard lock(state_mu_);
            reply(res, 200,
                  Json{{"ok", true}, {"sim_time_ms", tcu_.clock_ms()}, {"senders", routes_.size()}});
        });

        http_.Get("/api/v1/lampposts", [this](const Request&, Response& res) {
            std::lock_guard lock(state_mu_);
            Json out = Json::array();
            for (const auto& [_, d] : tcu_.fleet().lampposts()) {
                out.push_back(to_json(d));
            }
            reply(res, 200, out);
        });

        http_.Get("/api/v1/alerts", [this](const Request& req, Response& res) {
            guarded(res, [&] {
                std::optional<AlertState> state;
                if (req.has_param("state")) {
                    const std::string name = req.get_param_value("state");
                    state = alert_state_from_string(name);
                    if (!state) {
                        throw ValidationError("unknown alert state " + name, "state");
                    }
                }
                std::lock_guard lock(state_mu_);
                Json out = Json::array();
                for (const Alert& a : tcu_.alerts_in(state)) {
                    out.push_back(to_json(a));
                }
                reply(res, 200, out);
            });
        });

        http_.Get(R"(/api/v1/alerts/([^/]+))", [this](const Request& req, Response& res) {
            guarded(res, [&] {
                std::lock_guard lock(state_mu_);
                reply(res, 200, to_json(tcu_.alert(req.matches[1])));
            });
        });

        http_.Post(R"(/api/v1/alerts/([^/]+)/action)", [this](const Request& req, Response& res) {
            guarded(res, [&] {
                const Json body = parse_body(req);
                const std::string name = json_field::get_string(body, "action");
                const auto kind = tcu::operator_action_from_string(name);
                if (!kind) {
                    throw ValidationError("unknown action " + name, "action");
                }
                tcu::OperatorAction action{*kind, std::nullopt};
                if (json_field::has(body, "radius_m")) {
                    action.radius_m = json_field::get_number(body, "radius_m");
                }
                const std::string op =
                    json_field::has(body, "operator") ? json_field::get_string(body, "operator") : "operator";
                std::lock_guard lock(state_mu_);
                const Alert updated =
                    tcu_.operator_action(req.matches[1], action, op, request_time_locked(body));
                flush_locked();
                reply(res, 200, to_json(updated));
            });
        });

        http_.Get("/api/v1/queue", [this](const Request&, Response& res) {
            std::lock_guard lock(state_mu_);
            Json out = Json::array();
            for (const tcu::Notification& n : tcu_.snapshot_queue()) {
                out.push_back(to_json(n));
            }
            reply(res, 200, out);
        });

        http_.Get("/api/v1/risk", [this](const Request&, Response& res) {
            std::lock_guard lock(state_mu_);
            reply(res, 200, risk::to_json(tcu_.risk_context()));
        });

        http_.Get("/api/v1/warnings", [this](const Request&, Response& res) {
            std::lock_guard lock(state_mu_);
            Json out = Json::array();
            for (const tcu::PreventiveWarning& w : tcu_.warnings()) {
                out.push_back(to_json(w));
            }
            reply(res, 200, out);
        });

        http_.Get("/api/v1/snapshot", [this](const Request&, Response& res) {
            reply(res, 200, snapshot());
        });

        http_.Put(R"(/api/v1/lampposts/([^/]+)/override)", [this](const Request& req, Response& res) {
            guarded(res, [&] {
                const Json body = parse_body(req);
                std::optional<SignallingMode> mode;
                if (body.contains("mode") && !body.at("mode").is_null()) {
                    const std::string name = json_field::get_string(body, "mode");
                    mode = signalling_mode_from_string(name);
                    if (!mode) {
                        throw ValidationError("unknown signalling mode " + name, "mode");
                    }
                }
                const std::string op =
                    json_field::has(body, "operator") ? json_field::get_string(body, "operator") : "operator";
                std::lock_guard lock(state_mu_);
                tcu_.override_signalling(req.matches[1], mode, op, request_time_locked(body));
                flush_locked();
                reply(res, 200, to_json(tcu_.fleet().at(req.matches[1])));
            });
        });

        http_.Get("/api/v1/profiles", [this](const Request&, Response& res) {
            std::lock_guard lock(registry_mu_);
            reply(res, 200, Json{{"versions", registry_.versions()}, {"latest", registry_.latest_version()}});
        });

        http_.Get(R"(/api/v1/profiles/(\d+))", [this](const Request& req, Response& res) {
            guarded(res, [&] {
                std::lock_guard lock(registry_mu_);
                reply(res, 200, to_json(registry_.get(std::stoi(req.matches[1]))));
            });
        });

        http_.Post("/api/v1/profiles", [this](const Request& req, Response& res) {
            guarded(res, [&] {
                const DetectorProfile p = detector_profile_from_json(parse_body(req));
                reply(res, 201, Json{{"version", register_profile(p)}});
            });
        });

        http_.Post(R"(/api/v1/profiles/(\d+)/deploy)", [this](const Request& req, Response& res) {
            guarded(res, [&] {
                const Json body = parse_body(req);
                std::vector<std::string> targets;
                if (body.contains("targets")) {
                    if (!body.at("targets").is_array()) {
                        throw ValidationError("targets: expected array of lamppost ids", "targets");
                    }
                    for (const Json& t : body.at("targets")) {
                        if (!t.is_string()) {
                            throw ValidationError("targets: expected array of lamppost ids", "targets");
                        }
                        targets.push_back(t.get<std::string>());
                    }
                }
                std::optional<std::int64_t> at;
                if (json_field::has(body, "sim_time_ms")) {
                    at = json_field::get_int_in(body, "sim_time_ms", 0, INT64_MAX);
                }
                reply(res, 200, deploy(std::stoi(req.matches[1]), targets, at));
            });
        });

        http_.Get("/api/v1/events", [this](const Request&, Response& res) {
            auto sub = hub_.subscribe();
            res.set_header("Cache-Control", "no-cache");
            res.set_chunked_content_provider(
                "text/event-stream",
                [sub](std::size_t, httplib::DataSink& sink) {
                    if (auto e = sub->next(std::chrono::milliseconds(250))) {
                        const std::string frame = sse_frame(*e);
                        return sink.write(frame.data(), frame.size());
                    }
                    if (sub->closed()) {
                        sink.done();
                        return true;
                    }
                    static constexpr std::string_view keepalive = ": keepalive\n\n";
                    return sink.is_writable() && sink.write(keepalive.data(), keepalive.size());
                },
                [this, sub](bool) { hub_.unsubscribe(sub); });
        });
    }

    ServerOptions options_;
    std::unique_ptr<protocol::AuditLog> log_;
    tcu::TerritorialControlUnit tcu_;
    tcu::Gateway gateway_;
    registry::ModelRegistry registry_;
    std::vector<std::string> diagnostics_;
    /// Sender identity -> connection it last spoke on.
    std::map<std::string, std::shared_ptr<Connection>> routes_;
    mutable std::mutex state_mu_;

    std::mutex registry_mu_;
    std::mutex ack_mu_;
    std::condition_variable ack_cv_;
    std::map<std::string, std::uint64_t> awaiting_;
    std::map<std::string, protocol::AckPayload> acks_;

    Socket listener_;
    std::thread accept_thread_;
    mutable std::mutex conn_mu_;
    std::vector<std::shared_ptr<Connection>> connections_;

    httplib::Server http_;
    std::thread http_thread_;

    std::mutex stop_mu_;
    std::condition_variable stop_cv_;
    bool stopped_ = false;
};

TcuServer::TcuServer(ServerOptions options) : impl_(std::make_unique<Impl>(std::move(options))) {}

TcuServer::~TcuServer() = default;

void TcuServer::start() {
    impl_->start();
}

void TcuServer::stop() {
    impl_->stop();
}

void TcuServer::wait() {
    impl_->wait();
}

std::uint16_t TcuServer::stream_port() const {
    return impl_->stream_port_;
}

std::uint16_t TcuServer::http_port() const {
    return impl_->http_port_;
}

EventHub& TcuServer::events() {
    return impl_->hub_;
}

Json TcuServer::snapshot() const {
    return impl_->snapshot();
}

std::string TcuServer::audit_text() const {
    return impl_->audit_text();
}

std::vector<std::string> TcuServer::diagnostics() const {
    return impl_->diagnostics();
}

std::size_t TcuServer::open_connections() const {
    return impl_->open_connections();
}

int TcuServer::register_profile(const DetectorProfile& profile) {
    return impl_->register_profile(profile);
}

Json TcuServer::deploy(int version, const std::vector<std::string>& targets,
                       std::optional<std::int64_t> sim_time_ms) {
    return impl_->deploy(version, targets, sim_time_ms);
}

}  // namespace heimdall::net
