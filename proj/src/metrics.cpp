#include "marvel/metrics.hpp"

#include <cmath>

#include "marvel/errors.hpp"
#include "marvel/stats.hpp"

namespace marvel {

namespace {

template <typename A, typename B>
void require_aligned(const A& a, const B& b) {
  if (a.size() != b.size()) throw ShapeError("metric inputs are not aligned");
}

std::optional<double> ratio(std::size_t num, std::size_t den) {
  if (den == 0) return std::nullopt;
  return static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

std::optional<double> memorization_ratio(std::span<const int> predictions,
                                         std::span<const int> observed,
                                         std::span<const int> truth) {
  require_aligned(predictions, observed);
  require_aligned(observed, truth);
  std::size_t noisy = 0;
  std::size_t fitted = 0;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    if (observed[i] == truth[i]) continue;
    ++noisy;
    if (predictions[i] == observed[i]) ++fitted;
  }
  return ratio(fitted, noisy);
}

PrecisionRecall label_precision_recall(const std::vector<bool>& retained,
                                       std::span<const int> observed,
                                       std::span<const int> truth) {
  require_aligned(retained, observed);
  require_aligned(observed, truth);
  std::size_t kept = 0;
  std::size_t clean = 0;
  std::size_t both = 0;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    const bool is_clean = observed[i] == truth[i];
    kept += retained[i];
    clean += is_clean;
    both += retained[i] && is_clean;
  }
  return {ratio(both, kept), ratio(both, clean)};
}

std::optional<double> accuracy(std::span<const int> predictions, std::span<const int> labels) {
  require_aligned(predictions, labels);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) hits += predictions[i] == labels[i];
  return ratio(hits, labels.size());
}

std::optional<MarginSummary> margin_summary(std::span<const double> margins) {
  std::vector<double> finite;
  finite.reserve(margins.size());
  for (double m : margins) {
    if (std::isfinite(m)) finite.push_back(m);
  }
  if (finite.size() < 2) return std::nullopt;
  return MarginSummary{median(finite), sample_variance(finite), quantile(finite, 0.05)};
}

RetainedFractions retained_fractions(const std::vector<bool>& retained,
                                     const std::vector<bool>& noisy) {
  require_aligned(retained, noisy);
  std::size_t clean = 0, clean_kept = 0, dirty = 0, dirty_kept = 0;
  for (std::size_t i = 0; i < noisy.size(); ++i) {
    if (noisy[i]) {
      ++dirty;
      dirty_kept += retained[i];
    } else {
      ++clean;
      clean_kept += retained[i];
    }
  }
  return {ratio(clean_kept, clean), ratio(dirty_kept, dirty)};
}

}  // namespace marvel
