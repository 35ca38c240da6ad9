#include "heimdall/llu/signalling.hpp"

#include <array>

namespace heimdall {

namespace {
constexpr std::array<std::string_view, 3> kModeNames = {"off", "moderate_speed", "accident"};
}

std::string_view to_string(SignallingMode m) noexcept {
    return kModeNames[static_cast<std::size_t>(m)];
}

std::optional<SignallingMode> signalling_mode_from_string(std::string_view name) noexcept {
    for (std::size_t i = 0; i < kModeNames.size(); ++i) {
        if (kModeNames[i] == name) {
            return static_cast<SignallingMode>(i);
        }
    }
    return std::nullopt;
}

SignallingMode signalling_band(CriticalityIndex varphi, const CriticalityBounds& bounds) noexcept {
    const int v = varphi.value();
    const int moderate_upper = (bounds.n_max() + 1) / 2;
    if (v == 0) {
        return SignallingMode::off;
    }
    return v <= moderate_upper ? SignallingMode::moderate_speed : SignallingMode::accident;
}

SignallingState apply_mode(const SignallingState& state, SignallingMode mode, std::int64_t now_ms) {
    if (state.override_mode) {
        return state;
    }
    SignallingState next = state;
    if (next.mode != mode) {
        next.mode = mode;
        next.since_sim_time_ms = now_ms;
    }
    return next;
}

SignallingState apply_signalling(const SignallingState& state, CriticalityIndex varphi,
                                 const CriticalityBounds& bounds, std::int64_t now_ms) {
    return apply_mode(state, signalling_band(varphi, bounds), now_ms);
}

SignallingState apply_override(const SignallingState& state, std::optional<SignallingMode> cmd,
                               std::int64_t now_ms) {
    SignallingState next = state;
    next.override_mode = cmd;
    if (cmd && next.mode != *cmd) {
        next.mode = *cmd;
        next.since_sim_time_ms = now_ms;
    }
    return next;
}

Json to_json(const SignallingState& s) {
    Json j = Json::object();
    j["mode"] = std::string(to_string(s.mode));
    j["since_sim_time_ms"] = s.since_sim_time_ms;
    j["override"] = s.override_mode ? Json(std::string(to_string(*s.override_mode))) : Json(nullptr);
    return j;
}

}  // namespace heimdall
