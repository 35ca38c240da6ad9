#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "heimdall/core/json.hpp"
#include "heimdall/core/profile.hpp"
#include "heimdall/protocol/envelope.hpp"

namespace heimdall::registry {

/// Delivery path from the registry to lampposts. `deliver` sends one
/// PROFILE_DEPLOY envelope and returns the lamppost's ACK, or nullopt on
/// timeout.
class DeployChannel {
public:
    virtual ~DeployChannel() = default;
    virtual bool knows(const std::string& lamppost_id) const = 0;
    virtual std::optional<protocol::AckPayload> deliver(const std::string& lamppost_id,
                                                        const protocol::Envelope& deploy) = 0;
};

struct TargetResult {
    enum class Status { ok, rejected, timeout, unknown_target };

    std::string lamppost_id;
    Status status = Status::timeout;
    std::string detail;

    bool operator==(const TargetResult&) const = default;
};

std::string_view to_string(TargetResult::Status s) noexcept;

struct DeploymentReport {
    int version = 0;
    std::vector<TargetResult> targets;

    std::size_t ok_count() const noexcept;
};

Json to_json(const DeploymentReport& r);

/// Versioned store of detector profiles. Versions start at 1 and grow by one
/// per registration; stored profiles never change. With a directory, each
/// version is persisted as v<N>.json and reloaded on open.
class ModelRegistry {
public:
    ModelRegistry() = default;
    explicit ModelRegistry(std::filesystem::path dir);

    /// Validates (complete table, thresholds in range), assigns the next
    /// version and stores it. Identical content still gets a new version.
    int register_profile(DetectorProfile profile,
                         const std::optional<CriticalityBounds>& bounds = std::nullopt);

    bool contains(int version) const { return profiles_.contains(version); }
    /// Throws NotFoundError.
    const DetectorProfile& get(int version) const;
    int latest_version() const noexcept;
    std::vector<int> versions() const;

    /// Sends PROFILE_DEPLOY per target through `channel`. Unknown targets are
    /// reported as failed without stopping the others. Throws NotFoundError
    /// for an unknown version.
    DeploymentReport deploy(int version, const std::vector<std::string>& targets,
                            DeployChannel& channel, std::int64_t now_ms = 0);

    /// Re-reads the directory (no-op without one).
    void reload();

private:
    std::optional<std::filesystem::path> dir_;
    std::map<int, DetectorProfile> profiles_;
    std::uint64_t seq_ = 0;
};

}  // namespace heimdall::registry
