#include "heimdall/core/criticality.hpp"

#include <algorithm>
#include <cmath>

#include "heimdall/core/error.hpp"

namespace heimdall {

int exact_ceil(double x) noexcept {
    const double nearest = std::round(x);
    const double tol = 1e-9 * std::max(1.0, std::fabs(x));
    if (std::fabs(x - nearest) <= tol) {
        return static_cast<int>(nearest);
    }
    return static_cast<int>(std::ceil(x));
}

CriticalityIndex reassess_criticality(CriticalityIndex phi, WeightAlpha alpha,
                                      GlobalRiskIndex lambda, const CriticalityBounds& bounds) {
    if (!phi.fits(bounds)) {
        throw ValidationError("phi " + std::to_string(phi.value()) + " exceeds n_max " +
                                  std::to_string(bounds.n_max()),
                              "phi");
    }
    if (!lambda.fits(bounds)) {
        throw ValidationError("lambda " + std::to_string(lambda.value()) + " exceeds m_max " +
                                  std::to_string(bounds.m_max()),
                              "lambda");
    }
    const double raw = static_cast<double>(phi.value()) +
                       alpha.value() * static_cast<double>(lambda.value());
    return CriticalityIndex(std::min(exact_ceil(raw), bounds.n_max()));
}

CriticalityIndex base_criticality(AnomalyClass anomaly, const DetectorProfile& profile) {
    const auto it = profile.base_criticality_table.find(anomaly);
    if (it == profile.base_criticality_table.end()) {
        throw ConfigError("detector profile v" + std::to_string(profile.version) +
                          " has no base criticality for " + std::string(to_string(anomaly)));
    }
    return it->second;
}

}  // namespace heimdall
