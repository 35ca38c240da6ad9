#include "heimdall/protocol/audit_log.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <array>
#include <cerrno>
#include <cstring>
#include <fstream>
#include <sstream>

#include "heimdall/core/error.hpp"

namespace heimdall::protocol {

namespace {
constexpr std::array<std::string_view, 7> kKindNames = {"ingest", "action",  "propagate", "warning",
                                                        "feed",   "deploy", "error"};
}

std::string_view to_string(AuditKind k) noexcept {
    return kKindNames[static_cast<std::size_t>(k)];
}

std::optional<AuditKind> audit_kind_from_string(std::string_view name) noexcept {
    for (std::size_t i = 0; i < kKindNames.size(); ++i) {
        if (kKindNames[i] == name) {
            return static_cast<AuditKind>(i);
        }
    }
    return std::nullopt;
}

std::string encode_record(const AuditRecord& r) {
    Json j = Json::object();
    j["offset"] = r.offset;
    j["kind"] = std::string(to_string(r.kind));
    j["sim_time_ms"] = r.sim_time_ms;
    j["body"] = r.body;
    std::string line = j.dump();
    line.push_back('\n');
    return line;
}

AuditRecord decode_record(std::string_view line) {
    using namespace json_field;
    if (!line.empty() && line.back() == '\n') {
        line.remove_suffix(1);
    }
    Json j;
    try {
        j = Json::parse(line);
    } catch (const Json::parse_error& err) {
        throw ProtocolError("audit record parse error at byte " + std::to_string(err.byte), "record",
                            err.byte);
    }
    AuditRecord r;
    r.offset = static_cast<std::uint64_t>(get_int_in(j, "offset", 0, INT64_MAX));
    const std::string kind = get_string(j, "kind");
    const auto k = audit_kind_from_string(kind);
    if (!k) {
        throw ProtocolError("unknown audit kind " + kind, "kind");
    }
    r.kind = *k;
    r.sim_time_ms = get_int(j, "sim_time_ms");
    r.body = require(j, "body");
    require_object(r.body, "body");
    return r;
}

AuditLog::AuditLog(const std::filesystem::path& file) {
    fd_ = ::open(file.c_str(), O_WRONLY | O_CREAT | O_TRUNC | O_APPEND | O_CLOEXEC, 0644);
    if (fd_ < 0) {
        throw Error("cannot open audit log " + file.string() + ": " + std::strerror(errno));
    }
}

AuditLog::~AuditLog() {
    if (fd_ >= 0) {
        ::close(fd_);
    }
}

std::uint64_t AuditLog::append(AuditKind kind, std::int64_t sim_time_ms, Json body) {
    AuditRecord r{records_.size(), kind, sim_time_ms, std::move(body)};
    if (fd_ >= 0) {
        const std::string line = encode_record(r);
        const ssize_t n = ::write(fd_, line.data(), line.size());
        if (n != static_cast<ssize_t>(line.size())) {
            throw Error("audit log write failed: " + std::string(std::strerror(errno)));
        }
    }
    records_.push_back(std::move(r));
    return records_.back().offset;
}

std::string AuditLog::text() const {
    std::string out;
    for (const AuditRecord& r : records_) {
        out += encode_record(r);
    }
    return out;
}

AuditReplay replay_audit(std::string_view text) {
    AuditReplay out;
    std::size_t pos = 0;
    std::size_t line_no = 0;
    while (pos < text.size()) {
        ++line_no;
        const std::size_t nl = text.find('\n', pos);
        const bool last = nl == std::string_view::npos || nl + 1 == text.size();
        const std::string_view line =
            nl == std::string_view::npos ? text.substr(pos) : text.substr(pos, nl - pos + 1);
        pos = nl == std::string_view::npos ? text.size() : nl + 1;

        const bool complete = !line.empty() && line.back() == '\n';
        try {
            if (!complete) {
                throw ProtocolError("record has no terminating newline", "record");
            }
            AuditRecord r = decode_record(line);
            if (r.offset != out.records.size()) {
                throw ProtocolError("audit offset " + std::to_string(r.offset) + " at line " +
                                        std::to_string(line_no) + ", expected " +
                                        std::to_string(out.records.size()),
                                    "offset");
            }
            out.records.push_back(std::move(r));
        } catch (const ProtocolError& err) {
            if (!last) {
                throw ProtocolError("audit log corrupt at line " + std::to_string(line_no) + ": " +
                                        err.what(),
                                    err.field());
            }
            out.warning = "truncated torn final record at line " + std::to_string(line_no) +
                          " (" + err.what() + ")";
        }
    }
    return out;
}

AuditReplay replay_audit_file(const std::filesystem::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) {
        throw Error("cannot open audit log " + file.string());
    }
    std::stringstream buffer;
    buffer << in.rdbuf();
    return replay_audit(buffer.str());
}

}  // namespace heimdall::protocol
