#include "marvel/stats.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "marvel/errors.hpp"

namespace marvel {

double median(std::span<const double> values) {
  if (values.empty()) throw DomainError("median of an empty set");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const std::size_t mid = sorted.size() / 2;
  if (sorted.size() % 2 == 1) return sorted[mid];
  return 0.5 * (sorted[mid - 1] + sorted[mid]);
}

double sample_variance(std::span<const double> values) {
  if (values.size() < 2) throw DomainError("sample variance needs at least two values");
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(values.size());
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return ss / static_cast<double>(values.size() - 1);
}

double quantile(std::span<const double> values, double q) {
  if (values.empty()) throw DomainError("quantile of an empty set");
  if (!(q >= 0.0 && q <= 1.0)) throw DomainError("quantile level must lie in [0,1]");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const double pos = static_cast<double>(sorted.size() - 1) * q;  // 0-based
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

}  // namespace marvel
