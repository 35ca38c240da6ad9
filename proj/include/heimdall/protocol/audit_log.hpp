#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "heimdall/core/json.hpp"

namespace heimdall::protocol {

enum class AuditKind { ingest, action, propagate, warning, feed, deploy, error };

std::string_view to_string(AuditKind k) noexcept;
std::optional<AuditKind> audit_kind_from_string(std::string_view name) noexcept;

struct AuditRecord {
    std::uint64_t offset = 0;
    AuditKind kind = AuditKind::error;
    std::int64_t sim_time_ms = 0;
    Json body = Json::object();

    bool operator==(const AuditRecord&) const = default;
};

/// One JSON line: {"offset","kind","sim_time_ms","body"} plus '\n'.
std::string encode_record(const AuditRecord& record);
AuditRecord decode_record(std::string_view line);

/// Append-only log with a single writer. Records are kept in memory and,
/// when a path is given, each one is written to the file with a single
/// write(2) so a crash leaves either the whole line or nothing of it (a torn
/// tail is detected and dropped on replay).
class AuditLog {
public:
    AuditLog() = default;
    explicit AuditLog(const std::filesystem::path& file);
    ~AuditLog();

    AuditLog(const AuditLog&) = delete;
    AuditLog& operator=(const AuditLog&) = delete;

    std::uint64_t append(AuditKind kind, std::int64_t sim_time_ms, Json body);

    const std::vector<AuditRecord>& records() const noexcept { return records_; }
    std::uint64_t size() const noexcept { return records_.size(); }
    /// Concatenated lines, byte-identical to the file contents.
    std::string text() const;

private:
    std::vector<AuditRecord> records_;
    int fd_ = -1;
};

struct AuditReplay {
    std::vector<AuditRecord> records;
    /// Set when a torn final record was dropped.
    std::optional<std::string> warning;
};

/// Parses a whole log. A final line that is incomplete or unparsable is
/// dropped with a warning; corruption anywhere else, or non-dense offsets,
/// throws ProtocolError.
AuditReplay replay_audit(std::string_view text);
AuditReplay replay_audit_file(const std::filesystem::path& file);

}  // namespace heimdall::protocol
