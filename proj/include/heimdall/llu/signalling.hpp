#pragma once

#include <cstdint>
#include <optional>
#include <string_view>

#include "heimdall/core/json.hpp"
#include "heimdall/core/types.hpp"

namespace heimdall {

/// Sound/light signalling on a lamppost, ordered by severity.
enum class SignallingMode { off = 0, moderate_speed = 1, accident = 2 };

std::string_view to_string(SignallingMode m) noexcept;
std::optional<SignallingMode> signalling_mode_from_string(std::string_view name) noexcept;

struct SignallingState {
    SignallingMode mode = SignallingMode::off;
    std::int64_t since_sim_time_ms = 0;
    std::optional<SignallingMode> override_mode;

    bool operator==(const SignallingState&) const = default;
};

/// off for 0, moderate_speed for 1..ceil(n_max/2), accident above.
SignallingMode signalling_band(CriticalityIndex varphi, const CriticalityBounds& bounds) noexcept;

/// Sets the mode from the band of `varphi`. `since` moves only on a mode
/// change. An active override leaves the state untouched.
SignallingState apply_signalling(const SignallingState& state, CriticalityIndex varphi,
                                 const CriticalityBounds& bounds, std::int64_t now_ms);

/// Sets the mode to an exact value (e.g. the aggregate the TCU commands),
/// unless an override is active.
SignallingState apply_mode(const SignallingState& state, SignallingMode mode, std::int64_t now_ms);

/// A present command pins the mode; an absent one clears the pin and leaves
/// the mode to the next apply_signalling/apply_mode.
SignallingState apply_override(const SignallingState& state, std::optional<SignallingMode> cmd,
                               std::int64_t now_ms);

Json to_json(const SignallingState& s);

}  // namespace heimdall
