#pragma once

#include <cmath>
#include <numbers>

namespace btimc {

/// Standard normal CDF via the complementary error function.
inline double normal_cdf(double z) {
    return 0.5 * std::erfc(-z / std::numbers::sqrt2);
}

/// P(lo <= Z <= hi) for a standard normal Z. Each tail is evaluated through
/// erfc so that far-tail masses keep their relative precision.
inline double normal_interval(double lo, double hi) {
    if (!(hi > lo)) return 0.0;
    constexpr double r = 1.0 / std::numbers::sqrt2;
    if (lo >= 0.0) return 0.5 * (std::erfc(lo * r) - std::erfc(hi * r));
    if (hi <= 0.0) return 0.5 * (std::erfc(-hi * r) - std::erfc(-lo * r));
    return 1.0 - 0.5 * std::erfc(hi * r) - 0.5 * std::erfc(-lo * r);
}

}  // namespace btimc
