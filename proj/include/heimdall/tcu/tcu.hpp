#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "heimdall/core/json.hpp"
#include "heimdall/core/types.hpp"
#include "heimdall/protocol/audit_log.hpp"
#include "heimdall/protocol/envelope.hpp"
#include "heimdall/risk/risk_engine.hpp"
#include "heimdall/tcu/config.hpp"
#include "heimdall/tcu/fleet.hpp"
#include "heimdall/tcu/propagation.hpp"
#include "heimdall/tcu/queue.hpp"

namespace heimdall::tcu {

struct OperatorAction {
    enum class Kind { confirm, dismiss_false_positive, propagate_further, deactivate };

    Kind kind = Kind::confirm;
    /// Required for propagate_further; must be > 0.
    std::optional<double> radius_m;
};

std::string_view to_string(OperatorAction::Kind k) noexcept;
std::optional<OperatorAction::Kind> operator_action_from_string(std::string_view name) noexcept;

struct IngestOutcome {
    enum class Status { created, duplicate, rejected };

    Status status = Status::rejected;
    std::optional<Alert> alert;
    std::string reason;
};

/// Event pushed to dashboard subscribers. Types: alert_created,
/// alert_updated, queue_changed, risk_changed, warning_issued, warning_cleared.
struct TcuEvent {
    std::string type;
    Json data;
};

/// Territorial Control Unit. The audit log is the source of truth: every
/// input is recorded before its effects, and the in-memory state is a
/// projection that replay_tcu rebuilds exactly.
///
/// Not thread-safe. Callers serialize all access (the live server funnels
/// everything through one executor).
class TerritorialControlUnit {
public:
    /// Writes the bootstrap record (config + fleet) as the first entry of `log`.
    TerritorialControlUnit(const TcuConfig& config, protocol::AuditLog& log);

    TerritorialControlUnit(const TerritorialControlUnit&) = delete;
    TerritorialControlUnit& operator=(const TerritorialControlUnit&) = delete;

    /// Reassesses against the current lambda and opens an alert. Duplicate
    /// report ids return the existing alert without side effects; unknown
    /// lampposts and phi > n_max are rejected with an error record.
    IngestOutcome ingest_report(const AnomalyReport& report);

    void on_feed_update(const risk::RiskSignal& signal, std::int64_t now_ms);

    /// Expires signals that are no longer live at `now_ms` and re-evaluates
    /// the preventive warnings. No-op (and no record) when nothing expires.
    void advance_to(std::int64_t now_ms);

    /// Throws NotFoundError, ConflictError or ValidationError after writing
    /// an error record.
    Alert operator_action(const std::string& alert_id, const OperatorAction& action,
                          const std::string& operator_id, std::int64_t now_ms);

    /// Pins (or, with nullopt, releases) a lamppost's signalling mode.
    void override_signalling(const std::string& lamppost_id, std::optional<SignallingMode> mode,
                             const std::string& operator_id, std::int64_t now_ms);

    /// A lamppost acknowledged a profile deployment.
    void record_profile_ack(const std::string& lamppost_id, int version, std::int64_t now_ms);

    std::vector<Notification> snapshot_queue() const { return queue_.snapshot(); }
    const risk::GlobalRiskContext& risk_context() const noexcept { return risk_ctx_; }
    const FleetIndex& fleet() const noexcept { return fleet_; }
    const TcuConfig& config() const noexcept { return config_; }
    const std::map<std::string, Alert>& alerts() const noexcept { return alerts_; }
    std::vector<Alert> alerts_in(std::optional<AlertState> state) const;
    /// Throws NotFoundError.
    const Alert& alert(const std::string& alert_id) const;
    const std::vector<PreventiveWarning>& warnings() const noexcept { return warnings_; }
    std::int64_t clock_ms() const noexcept { return clock_ms_; }
    const protocol::AuditLog& audit() const noexcept { return log_; }

    /// Commands produced since the last drain, in emission order.
    std::vector<protocol::CommandPayload> drain_commands();

    void set_event_listener(std::function<void(const TcuEvent&)> listener) {
        listener_ = std::move(listener);
    }

    /// Deterministic JSON projection of the whole state.
    Json snapshot() const;

private:
    void touch_clock(std::int64_t now_ms);
    void emit(std::string type, Json data);
    void emit_queue_changed();
    void refresh_risk(std::int64_t now_ms, bool force_event);
    void apply_preventive(std::int64_t now_ms);
    void refresh_signalling(const std::string& lamppost_id, std::int64_t now_ms,
                            const std::string& reason, const std::optional<std::string>& alert_id);
    void run_propagation(Alert& alert, double radius_m, std::int64_t now_ms);
    void release_alert_signalling(const Alert& alert, std::int64_t now_ms);
    std::string next_alert_id();
    std::string next_warning_id();
    void record_action_error(const std::string& alert_id, const OperatorAction& action,
                             const std::string& operator_id, std::int64_t now_ms,
                             const std::string& reason);

    TcuConfig config_;
    protocol::AuditLog& log_;
    FleetIndex fleet_;
    risk::SignalStore signals_;
    risk::GlobalRiskContext risk_ctx_;
    std::map<std::string, Alert> alerts_;
    std::map<std::string, std::string> alert_by_report_;
    std::map<std::string, std::string> rejected_reports_;
    NotificationQueue queue_;
    std::vector<PreventiveWarning> warnings_;
    /// lamppost -> alert id -> demanded mode for active/confirmed alerts.
    std::map<std::string, std::map<std::string, SignallingMode>> demands_;
    std::vector<protocol::CommandPayload> outbox_;
    std::function<void(const TcuEvent&)> listener_;
    std::int64_t clock_ms_ = 0;
    std::uint64_t alert_counter_ = 0;
    std::uint64_t warning_counter_ = 0;
};

/// A TCU rebuilt from an audit log, owning the regenerated log.
struct ReplayedTcu {
    std::unique_ptr<protocol::AuditLog> log;
    std::unique_ptr<TerritorialControlUnit> tcu;
    /// True when the regenerated log equals the input record for record.
    bool log_identical = false;
    std::optional<std::string> divergence;
};

/// Re-applies the input records (bootstrap, ingest, feed, action, deploy,
/// error) to a fresh TCU; derived records (propagate, warning) are
/// regenerated and compared. Throws ProtocolError if the first record is
/// not a bootstrap.
ReplayedTcu replay_tcu(const std::vector<protocol::AuditRecord>& records);

}  // namespace heimdall::tcu
