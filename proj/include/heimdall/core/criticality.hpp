#pragma once

#include "heimdall/core/profile.hpp"
#include "heimdall/core/types.hpp"

namespace heimdall {

/// Ceiling of a real that should be read as an exact decimal quantity.
/// Values within 1e-9 (relative, at least absolute) of an integer snap to it
/// first, so products like 0.7 * 10 ceil to 7 rather than 8.
int exact_ceil(double x) noexcept;

/// Reassessed criticality: min(ceil(phi + alpha * lambda), n_max).
/// The result never drops below phi and never exceeds n_max.
CriticalityIndex reassess_criticality(CriticalityIndex phi, WeightAlpha alpha,
                                      GlobalRiskIndex lambda, const CriticalityBounds& bounds);

/// Table lookup. Throws ConfigError naming the class when the profile has
/// no entry for it.
CriticalityIndex base_criticality(AnomalyClass anomaly, const DetectorProfile& profile);

}  // namespace heimdall
