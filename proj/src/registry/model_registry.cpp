#include "heimdall/registry/model_registry.hpp"

#include <fstream>
#include <regex>

#include "heimdall/core/error.hpp"

namespace heimdall::registry {

std::string_view to_string(TargetResult::Status s) noexcept {
    switch (s) {
        case TargetResult::Status::ok:
            return "ok";
        case TargetResult::Status::rejected:
            return "rejected";
        case TargetResult::Status::timeout:
            return "timeout";
        case TargetResult::Status::unknown_target:
            return "unknown_target";
    }
    return "timeout";
}

std::size_t DeploymentReport::ok_count() const noexcept {
    std::size_t n = 0;
    for (const TargetResult& t : targets) {
        n += t.status == TargetResult::Status::ok ? 1 : 0;
    }
    return n;
}

Json to_json(const DeploymentReport& r) {
    Json j = Json::object();
    j["version"] = r.version;
    Json targets = Json::array();
    for (const TargetResult& t : r.targets) {
        Json e = Json::object();
        e["lamppost_id"] = t.lamppost_id;
        e["status"] = std::string(to_string(t.status));
        e["detail"] = t.detail;
        targets.push_back(std::move(e));
    }
    j["targets"] = std::move(targets);
    j["ok"] = r.ok_count();
    j["total"] = r.targets.size();
    return j;
}

ModelRegistry::ModelRegistry(std::filesystem::path dir) : dir_(std::move(dir)) {
    std::filesystem::create_directories(*dir_);
    reload();
}

void ModelRegistry::reload() {
    if (!dir_) {
        return;
    }
    static const std::regex name_re(R"(v(\d+)\.json)");
    std::map<int, DetectorProfile> loaded;
    for (const auto& entry : std::filesystem::directory_iterator(*dir_)) {
        std::smatch m;
        const std::string name = entry.path().filename().string();
        if (!entry.is_regular_file() || !std::regex_match(name, m, name_re)) {
            continue;
        }
        const int version = std::stoi(m[1].str());
        DetectorProfile p = load_detector_profile(entry.path());
        p.version = version;
        loaded.emplace(version, std::move(p));
    }
    profiles_ = std::move(loaded);
}

int ModelRegistry::register_profile(DetectorProfile profile,
                                    const std::optional<CriticalityBounds>& bounds) {
    profile.version = latest_version() + 1;
    validate_profile(profile, bounds);
    if (dir_) {
        const auto path = *dir_ / ("v" + std::to_string(profile.version) + ".json");
        const auto tmp = path.string() + ".tmp";
        {
            std::ofstream out(tmp, std::ios::trunc);
            out << to_json(profile).dump(2) << '\n';
            if (!out) {
                throw Error("cannot write " + tmp);
            }
        }
        std::filesystem::rename(tmp, path);
    }
    const int version = profile.version;
    profiles_.emplace(version, std::move(profile));
    return version;
}

const DetectorProfile& ModelRegistry::get(int version) const {
    const auto it = profiles_.find(version);
    if (it == profiles_.end()) {
        throw NotFoundError("profile version " + std::to_string(version) + " not found");
    }
    return it->second;
}

int ModelRegistry::latest_version() const noexcept {
    return profiles_.empty() ? 0 : profiles_.rbegin()->first;
}

std::vector<int> ModelRegistry::versions() const {
    std::vector<int> out;
    for (const auto& [v, _] : profiles_) {
        out.push_back(v);
    }
    return out;
}

DeploymentReport ModelRegistry::deploy(int version, const std::vector<std::string>& targets,
                                       DeployChannel& channel, std::int64_t now_ms) {
    const DetectorProfile& profile = get(version);
    DeploymentReport report;
    report.version = version;
    for (const std::string& target : targets) {
        TargetResult result{target, TargetResult::Status::timeout, ""};
        if (!channel.knows(target)) {
            result.status = TargetResult::Status::unknown_target;
            result.detail = "lamppost not in fleet";
            report.targets.push_back(std::move(result));
            continue;
        }
        const protocol::Envelope env =
            protocol::make_profile_deploy("registry", ++seq_, now_ms, {target, profile});
        const auto ack = channel.deliver(target, env);
        if (!ack) {
            result.detail = "no ack";
        } else if (!ack->ok) {
            result.status = TargetResult::Status::rejected;
            result.detail = ack->detail;
        } else if (ack->profile_version != version) {
            result.status = TargetResult::Status::rejected;
            result.detail = "acknowledged a different version";
        } else {
            result.status = TargetResult::Status::ok;
            result.detail = "active";
        }
        report.targets.push_back(std::move(result));
    }
    return report;
}

}  // namespace heimdall::registry
