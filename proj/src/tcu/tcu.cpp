#include "heimdall/tcu/tcu.hpp"

#include <algorithm>
#include <array>
#include <cstdio>

#include "heimdall/core/criticality.hpp"
#include "heimdall/core/error.hpp"

namespace heimdall::tcu {

namespace {

using protocol::AuditKind;

constexpr std::array<std::string_view, 4> kActionNames = {"confirm", "dismiss_false_positive",
                                                          "propagate_further", "deactivate"};

std::string padded_id(char prefix, std::uint64_t n) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%c-%06llu", prefix, static_cast<unsigned long long>(n));
    return buf;
}

Json action_body(const std::string& alert_id, const OperatorAction& action,
                 const std::string& operator_id) {
    Json body = Json::object();
    body["alert_id"] = alert_id;
    body["action"] = std::string(to_string(action.kind));
    if (action.radius_m) {
        body["radius_m"] = *action.radius_m;
    }
    body["operator"] = operator_id;
    return body;
}

OperatorAction action_from_body(const Json& body) {
    OperatorAction action;
    const std::string name = json_field::get_string(body, "action", "body");
    const auto kind = operator_action_from_string(name);
    if (!kind) {
        throw ProtocolError("body.action: unknown action " + name, "action");
    }
    action.kind = *kind;
    if (json_field::has(body, "radius_m")) {
        action.radius_m = json_field::get_number(body, "radius_m", "body");
    }
    return action;
}

std::optional<SignallingMode> override_mode_from_body(const Json& body) {
    const Json& m = json_field::require(body, "mode", "body");
    if (m.is_null()) {
        return std::nullopt;
    }
    const auto mode = signalling_mode_from_string(m.get<std::string>());
    if (!mode) {
        throw ProtocolError("body.mode: unknown signalling mode", "mode");
    }
    return mode;
}

}  // namespace

std::string_view to_string(OperatorAction::Kind k) noexcept {
    return kActionNames[static_cast<std::size_t>(k)];
}

std::optional<OperatorAction::Kind> operator_action_from_string(std::string_view name) noexcept {
    for (std::size_t i = 0; i < kActionNames.size(); ++i) {
        if (kActionNames[i] == name) {
            return static_cast<OperatorAction::Kind>(i);
        }
    }
    return std::nullopt;
}

TerritorialControlUnit::TerritorialControlUnit(const TcuConfig& config, protocol::AuditLog& log)
    : config_(config), log_(log), fleet_(config.fleet), signals_(config.bounds) {
    config_.validate();
    risk_ctx_ = signals_.context(0);

    Json fleet = Json::array();
    for (const auto& [id, d] : fleet_.lampposts()) {
        Json entry = Json::object();
        entry["lamppost_id"] = id;
        entry["position"] = to_json(d.position);
        entry["active_profile_version"] = d.active_profile_version;
        fleet.push_back(std::move(entry));
    }
    Json body = Json::object();
    body["op"] = "bootstrap";
    body["config"] = to_json(config_);
    body["fleet"] = std::move(fleet);
    log_.append(AuditKind::deploy, 0, std::move(body));
}

void TerritorialControlUnit::touch_clock(std::int64_t now_ms) {
    clock_ms_ = std::max(clock_ms_, now_ms);
}

void TerritorialControlUnit::emit(std::string type, Json data) {
    if (listener_) {
        listener_(TcuEvent{std::move(type), std::move(data)});
    }
}

void TerritorialControlUnit::emit_queue_changed() {
    if (!listener_) {
        return;
    }
    Json data = Json::object();
    data["length"] = queue_.size();
    const Notification* head = queue_.head();
    data["head"] = head ? Json(head->alert_id) : Json(nullptr);
    emit("queue_changed", std::move(data));
}

std::string TerritorialControlUnit::next_alert_id() {
    return padded_id('A', ++alert_counter_);
}

std::string TerritorialControlUnit::next_warning_id() {
    return padded_id('W', ++warning_counter_);
}

IngestOutcome TerritorialControlUnit::ingest_report(const AnomalyReport& report) {
    if (const auto it = alert_by_report_.find(report.report_id); it != alert_by_report_.end()) {
        return {IngestOutcome::Status::duplicate, alerts_.at(it->second), "duplicate report_id"};
    }
    if (const auto it = rejected_reports_.find(report.report_id); it != rejected_reports_.end()) {
        return {IngestOutcome::Status::rejected, std::nullopt, it->second};
    }

    advance_to(report.sim_time_ms);

    std::string reason;
    if (!fleet_.contains(report.lamppost_id)) {
        reason = "unknown lamppost " + report.lamppost_id;
    } else if (!report.phi.fits(config_.bounds)) {
        reason = "phi " + std::to_string(report.phi.value()) + " exceeds n_max " +
                 std::to_string(config_.bounds.n_max());
    }
    if (!reason.empty()) {
        Json body = Json::object();
        body["input"] = "ingest";
        body["reason"] = reason;
        body["report"] = to_json(report);
        log_.append(AuditKind::error, report.sim_time_ms, std::move(body));
        touch_clock(report.sim_time_ms);
        rejected_reports_.emplace(report.report_id, reason);
        return {IngestOutcome::Status::rejected, std::nullopt, reason};
    }

    Alert alert;
    alert.alert_id = next_alert_id();
    alert.source_report = report;
    alert.lambda_at_ingest = risk_ctx_.lambda;
    alert.varphi =
        reassess_criticality(report.phi, config_.alpha, alert.lambda_at_ingest, config_.bounds);
    alert.state = AlertState::active;
    alert.created_sim_time_ms = report.sim_time_ms;

    Json body = Json::object();
    body["report"] = to_json(report);
    body["alert_id"] = alert.alert_id;
    body["varphi"] = alert.varphi.value();
    body["lambda"] = alert.lambda_at_ingest.value();
    log_.append(AuditKind::ingest, report.sim_time_ms, std::move(body));
    touch_clock(report.sim_time_ms);

    const std::string id = alert.alert_id;
    alert_by_report_.emplace(report.report_id, id);
    Alert& stored = alerts_.emplace(id, std::move(alert)).first->second;
    queue_.upsert(Notification{id, stored.varphi, stored.created_sim_time_ms, report.anomaly,
                               report.lamppost_id});
    emit("alert_created", to_json(stored));
    emit_queue_changed();

    if (stored.varphi.value() >= 1) {
        demands_[report.lamppost_id][id] = signalling_band(stored.varphi, config_.bounds);
        refresh_signalling(report.lamppost_id, report.sim_time_ms, "alert", id);
        run_propagation(stored, config_.propagation_radius_m, report.sim_time_ms);
    }
    return {IngestOutcome::Status::created, stored, ""};
}

void TerritorialControlUnit::run_propagation(Alert& alert, double radius_m, std::int64_t now_ms) {
    const std::vector<SignallingCommand> commands =
        propagate_alert(alert, fleet_, radius_m, config_.bounds);
    if (commands.empty()) {
        return;
    }
    Json list = Json::array();
    for (const SignallingCommand& c : commands) {
        Json entry = Json::object();
        entry["lamppost_id"] = c.lamppost_id;
        entry["mode"] = std::string(to_string(c.mode));
        list.push_back(std::move(entry));
    }
    Json body = Json::object();
    body["alert_id"] = alert.alert_id;
    body["radius_m"] = radius_m;
    body["commands"] = std::move(list);
    log_.append(AuditKind::propagate, now_ms, std::move(body));

    for (const SignallingCommand& c : commands) {
        demands_[c.lamppost_id][alert.alert_id] = c.mode;
        refresh_signalling(c.lamppost_id, now_ms, "propagate", alert.alert_id);
    }
    emit("alert_updated", to_json(alert));
}

void TerritorialControlUnit::refresh_signalling(const std::string& lamppost_id, std::int64_t now_ms,
                                                const std::string& reason,
                                                const std::optional<std::string>& alert_id) {
    const LamppostDescriptor& d = fleet_.at(lamppost_id);
    if (d.signalling.override_mode) {
        return;
    }
    SignallingMode desired = SignallingMode::off;
    if (const auto it = demands_.find(lamppost_id); it != demands_.end()) {
        for (const auto& [_, mode] : it->second) {
            desired = std::max(desired, mode);
        }
    }
    const bool warning_active = std::any_of(warnings_.begin(), warnings_.end(),
                                            [](const PreventiveWarning& w) { return w.active; });
    if (warning_active) {
        desired = std::max(desired, SignallingMode::moderate_speed);
    }
    if (desired == d.signalling.mode) {
        return;
    }
    fleet_.set_signalling(lamppost_id, apply_mode(d.signalling, desired, now_ms));
    outbox_.push_back({lamppost_id, desired, false, reason, alert_id});
}

void TerritorialControlUnit::release_alert_signalling(const Alert& alert, std::int64_t now_ms) {
    std::vector<std::string> touched = alert.propagated_to;
    touched.insert(touched.begin(), alert.source_report.lamppost_id);
    for (const std::string& id : touched) {
        if (const auto it = demands_.find(id); it != demands_.end()) {
            it->second.erase(alert.alert_id);
            if (it->second.empty()) {
                demands_.erase(it);
            }
        }
        if (fleet_.contains(id)) {
            refresh_signalling(id, now_ms, "clear", alert.alert_id);
        }
    }
}

void TerritorialControlUnit::on_feed_update(const risk::RiskSignal& signal, std::int64_t now_ms) {
    risk::validate_signal(signal);
    advance_to(now_ms);

    Json body = Json::object();
    body["op"] = "update";
    body["signal"] = risk::to_json(signal);
    log_.append(AuditKind::feed, now_ms, std::move(body));
    touch_clock(now_ms);

    signals_.add(signal);
    refresh_risk(now_ms, true);
    apply_preventive(now_ms);
}

void TerritorialControlUnit::advance_to(std::int64_t now_ms) {
    const std::vector<risk::RiskSignal> expired = signals_.expire(now_ms);
    if (expired.empty()) {
        return;
    }
    Json list = Json::array();
    for (const risk::RiskSignal& s : expired) {
        Json entry = Json::object();
        entry["source_id"] = s.source_id;
        entry["issued_sim_time_ms"] = s.issued_sim_time_ms;
        list.push_back(std::move(entry));
    }
    Json body = Json::object();
    body["op"] = "expire";
    body["expired"] = std::move(list);
    log_.append(AuditKind::feed, now_ms, std::move(body));
    touch_clock(now_ms);

    refresh_risk(now_ms, false);
    apply_preventive(now_ms);
}

void TerritorialControlUnit::refresh_risk(std::int64_t now_ms, bool force_event) {
    risk::GlobalRiskContext next = signals_.context(now_ms);
    const bool changed =
        next.lambda != risk_ctx_.lambda || next.contributing != risk_ctx_.contributing;
    risk_ctx_ = std::move(next);
    if (changed || force_event) {
        emit("risk_changed", risk::to_json(risk_ctx_));
    }
}

void TerritorialControlUnit::apply_preventive(std::int64_t now_ms) {
    PreventiveDecision decision =
        evaluate_preventive(risk_ctx_, fleet_, config_.preventive_threshold, warnings_);
    if (decision.clear.empty() && !decision.issue) {
        return;
    }
    for (const std::string& id : decision.clear) {
        for (PreventiveWarning& w : warnings_) {
            if (w.warning_id == id && w.active) {
                w.active = false;
                w.cleared_sim_time_ms = now_ms;
                Json body = Json::object();
                body["op"] = "clear";
                body["warning"] = to_json(w);
                log_.append(AuditKind::warning, now_ms, std::move(body));
                emit("warning_cleared", to_json(w));
            }
        }
    }
    if (decision.issue) {
        PreventiveWarning w = std::move(*decision.issue);
        w.warning_id = next_warning_id();
        w.issued_sim_time_ms = now_ms;
        Json body = Json::object();
        body["op"] = "issue";
        body["warning"] = to_json(w);
        log_.append(AuditKind::warning, now_ms, std::move(body));
        emit("warning_issued", to_json(w));
        warnings_.push_back(std::move(w));
    }
    for (const std::string& id : fleet_.ids()) {
        refresh_signalling(id, now_ms, "warning", std::nullopt);
    }
}

void TerritorialControlUnit::record_action_error(const std::string& alert_id,
                                                 const OperatorAction& action,
                                                 const std::string& operator_id,
                                                 std::int64_t now_ms, const std::string& reason) {
    Json body = Json::object();
    body["input"] = "action";
    body["reason"] = reason;
    const Json fields = action_body(alert_id, action, operator_id);
    for (const auto& [k, v] : fields.items()) {
        body[k] = v;
    }
    log_.append(AuditKind::error, now_ms, std::move(body));
    touch_clock(now_ms);
}

Alert TerritorialControlUnit::operator_action(const std::string& alert_id,
                                              const OperatorAction& action,
                                              const std::string& operator_id, std::int64_t now_ms) {
    advance_to(now_ms);

    const auto it = alerts_.find(alert_id);
    if (it == alerts_.end()) {
        const std::string reason = "alert " + alert_id + " not found";
        record_action_error(alert_id, action, operator_id, now_ms, reason);
        throw NotFoundError(reason);
    }
    Alert& alert = it->second;

    if (action.kind == OperatorAction::Kind::propagate_further &&
        (!action.radius_m || !(*action.radius_m > 0.0))) {
        const std::string reason = "propagate_further requires radius_m > 0";
        record_action_error(alert_id, action, operator_id, now_ms, reason);
        throw ValidationError(reason, "radius_m");
    }

    std::optional<AlertState> target;
    switch (action.kind) {
        case OperatorAction::Kind::confirm:
            target = AlertState::confirmed;
            break;
        case OperatorAction::Kind::dismiss_false_positive:
            target = AlertState::dismissed_false_positive;
            break;
        case OperatorAction::Kind::deactivate:
            target = AlertState::deactivated;
            break;
        case OperatorAction::Kind::propagate_further:
            break;
    }
    const AlertState from = alert.state;
    const bool legal = target ? can_transition(from, *target) : !is_terminal(from);
    if (!legal) {
        const std::string reason = "alert " + alert_id + " is " + std::string(to_string(from)) +
                                   "; " + std::string(to_string(action.kind)) + " not allowed";
        record_action_error(alert_id, action, operator_id, now_ms, reason);
        throw ConflictError(reason, std::string(to_string(from)));
    }

    Json body = action_body(alert_id, action, operator_id);
    body["from_state"] = std::string(to_string(from));
    body["to_state"] = std::string(to_string(target.value_or(from)));
    log_.append(AuditKind::action, now_ms, std::move(body));
    touch_clock(now_ms);

    if (target) {
        alert.transition_to(*target);
        if (is_terminal(alert.state)) {
            queue_.remove(alert_id);
            release_alert_signalling(alert, now_ms);
            emit("alert_updated", to_json(alert));
            emit_queue_changed();
        } else {
            emit("alert_updated", to_json(alert));
        }
    } else {
        run_propagation(alert, *action.radius_m, now_ms);
    }
    return alert;
}

void TerritorialControlUnit::override_signalling(const std::string& lamppost_id,
                                                 std::optional<SignallingMode> mode,
                                                 const std::string& operator_id,
                                                 std::int64_t now_ms) {
    advance_to(now_ms);

    Json body = Json::object();
    body["action"] = "override";
    body["lamppost_id"] = lamppost_id;
    body["mode"] = mode ? Json(std::string(to_string(*mode))) : Json(nullptr);
    body["operator"] = operator_id;

    if (!fleet_.contains(lamppost_id)) {
        const std::string reason = "unknown lamppost " + lamppost_id;
        Json err = Json::object();
        err["input"] = "override";
        err["reason"] = reason;
        for (auto& [k, v] : body.items()) {
            err[k] = v;
        }
        log_.append(AuditKind::error, now_ms, std::move(err));
        touch_clock(now_ms);
        throw NotFoundError(reason);
    }
    log_.append(AuditKind::action, now_ms, std::move(body));
    touch_clock(now_ms);

    const LamppostDescriptor& d = fleet_.at(lamppost_id);
    fleet_.set_signalling(lamppost_id, apply_override(d.signalling, mode, now_ms));
    if (mode) {
        outbox_.push_back({lamppost_id, mode, true, "override", std::nullopt});
    } else {
        outbox_.push_back({lamppost_id, std::nullopt, true, "override_released", std::nullopt});
        refresh_signalling(lamppost_id, now_ms, "override_released", std::nullopt);
    }
}

void TerritorialControlUnit::record_profile_ack(const std::string& lamppost_id, int version,
                                                std::int64_t now_ms) {
    if (!fleet_.contains(lamppost_id)) {
        throw NotFoundError("unknown lamppost " + lamppost_id);
    }
    advance_to(now_ms);
    Json body = Json::object();
    body["op"] = "profile_ack";
    body["lamppost_id"] = lamppost_id;
    body["version"] = version;
    log_.append(AuditKind::deploy, now_ms, std::move(body));
    touch_clock(now_ms);
    fleet_.set_profile_version(lamppost_id, version);
}

std::vector<Alert> TerritorialControlUnit::alerts_in(std::optional<AlertState> state) const {
    std::vector<Alert> out;
    for (const auto& [_, a] : alerts_) {
        if (!state || a.state == *state) {
            out.push_back(a);
        }
    }
    return out;
}

const Alert& TerritorialControlUnit::alert(const std::string& alert_id) const {
    const auto it = alerts_.find(alert_id);
    if (it == alerts_.end()) {
        throw NotFoundError("alert " + alert_id + " not found");
    }
    return it->second;
}

std::vector<protocol::CommandPayload> TerritorialControlUnit::drain_commands() {
    std::vector<protocol::CommandPayload> out;
    out.swap(outbox_);
    return out;
}

Json TerritorialControlUnit::snapshot() const {
    Json j = Json::object();
    j["sim_time_ms"] = clock_ms_;
    j["config"] = to_json(config_);
    Json fleet = Json::array();
    for (const auto& [_, d] : fleet_.lampposts()) {
        fleet.push_back(to_json(d));
    }
    j["lampposts"] = std::move(fleet);
    Json alerts = Json::array();
    for (const auto& [_, a] : alerts_) {
        alerts.push_back(to_json(a));
    }
    j["alerts"] = std::move(alerts);
    Json queue = Json::array();
    for (const Notification& n : queue_.snapshot()) {
        queue.push_back(to_json(n));
    }
    j["queue"] = std::move(queue);
    j["risk"] = risk::to_json(risk_ctx_);
    Json warnings = Json::array();
    for (const PreventiveWarning& w : warnings_) {
        warnings.push_back(to_json(w));
    }
    j["warnings"] = std::move(warnings);
    j["audit_records"] = log_.size();
    return j;
}

ReplayedTcu replay_tcu(const std::vector<protocol::AuditRecord>& records) {
    using namespace json_field;
    if (records.empty() || records.front().kind != AuditKind::deploy ||
        !has(records.front().body, "op") || records.front().body.at("op") != "bootstrap") {
        throw ProtocolError("audit log does not start with a bootstrap record", "op");
    }
    const Json& boot = records.front().body;
    TcuConfig config = tcu_config_from_json(require(boot, "config", "body"));
    const Json& fleet = require(boot, "fleet", "body");
    for (const Json& entry : fleet) {
        config.fleet.push_back(lamppost_from_json(entry, "body.fleet"));
    }
    config.validate();

    ReplayedTcu out;
    out.log = std::make_unique<protocol::AuditLog>();
    out.tcu = std::make_unique<TerritorialControlUnit>(config, *out.log);
    TerritorialControlUnit& tcu = *out.tcu;

    const auto reapply_action = [&](const Json& body, std::int64_t t) {
        if (has(body, "action") && body.at("action") == "override") {
            tcu.override_signalling(get_string(body, "lamppost_id", "body"),
                                    override_mode_from_body(body),
                                    get_string(body, "operator", "body"), t);
        } else {
            tcu.operator_action(get_string(body, "alert_id", "body"), action_from_body(body),
                                get_string(body, "operator", "body"), t);
        }
    };

    for (std::size_t i = 1; i < records.size(); ++i) {
        const protocol::AuditRecord& r = records[i];
        const Json& body = r.body;
        switch (r.kind) {
            case AuditKind::ingest:
                tcu.ingest_report(anomaly_report_from_json(require(body, "report", "body"), "body.report"));
                break;
            case AuditKind::feed: {
                const std::string op = get_string(body, "op", "body");
                if (op == "update") {
                    tcu.on_feed_update(
                        risk::risk_signal_from_json(require(body, "signal", "body"), "body.signal"),
                        r.sim_time_ms);
                } else if (op == "expire") {
                    tcu.advance_to(r.sim_time_ms);
                } else {
                    throw ProtocolError("body.op: unknown feed op " + op, "op");
                }
                break;
            }
            case AuditKind::action:
                reapply_action(body, r.sim_time_ms);
                break;
            case AuditKind::deploy: {
                const std::string op = get_string(body, "op", "body");
                if (op != "profile_ack") {
                    throw ProtocolError("body.op: unexpected deploy op " + op, "op");
                }
                tcu.record_profile_ack(get_string(body, "lamppost_id", "body"),
                                       static_cast<int>(get_int(body, "version", "body")),
                                       r.sim_time_ms);
                break;
            }
            case AuditKind::error: {
                const std::string input = get_string(body, "input", "body");
                if (input == "ingest") {
                    tcu.ingest_report(
                        anomaly_report_from_json(require(body, "report", "body"), "body.report"));
                } else {
                    try {
                        reapply_action(body, r.sim_time_ms);
                    } catch (const ProtocolError&) {
                        throw;
                    } catch (const Error&) {
                        // The failure is the expected outcome; it re-records itself.
                    }
                }
                break;
            }
            case AuditKind::propagate:
            case AuditKind::warning:
                break;
        }
        tcu.drain_commands();
    }

    const auto& regenerated = out.log->records();
    out.log_identical = regenerated.size() == records.size();
    const std::size_t n = std::min(regenerated.size(), records.size());
    for (std::size_t i = 0; i < n; ++i) {
        if (protocol::encode_record(regenerated[i]) != protocol::encode_record(records[i])) {
            out.log_identical = false;
            out.divergence = "record " + std::to_string(i) + " differs on replay";
            break;
        }
    }
    if (!out.log_identical && !out.divergence) {
        out.divergence = "replay produced " + std::to_string(regenerated.size()) +
                         " records, log has " + std::to_string(records.size());
    }
    return out;
}

}  // namespace heimdall::tcu
