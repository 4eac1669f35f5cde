#pragma once

#include <span>

namespace marvel {

/// Midpoint of the two central order statistics for even counts.
/// Requires a nonempty input.
double median(std::span<const double> values);

/// Sample variance (divisor count-1). Requires at least two values.
double sample_variance(std::span<const double> values);

/// Linear interpolation between order statistics at 1-based position
/// 1 + (count-1) * q.
double quantile(std::span<const double> values, double q);

}  // namespace marvel
