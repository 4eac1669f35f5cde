#pragma once

#include <optional>
#include <span>
#include <vector>

namespace marvel {

/// Fraction of noisy instances (observed != truth) predicted as their
/// observed label. Absent when there are no noisy instances.
std::optional<double> memorization_ratio(std::span<const int> predictions,
                                         std::span<const int> observed,
                                         std::span<const int> truth);

struct PrecisionRecall {
  std::optional<double> precision;  // |clean & retained| / |retained|
  std::optional<double> recall;     // |clean & retained| / |clean|
};

PrecisionRecall label_precision_recall(const std::vector<bool>& retained,
                                       std::span<const int> observed, std::span<const int> truth);

std::optional<double> accuracy(std::span<const int> predictions, std::span<const int> labels);

struct MarginSummary {
  double median = 0.0;
  double variance = 0.0;
  double q05 = 0.0;
};

/// Absent for fewer than two finite values; non-finite entries are skipped.
std::optional<MarginSummary> margin_summary(std::span<const double> margins);

struct RetainedFractions {
  std::optional<double> clean;
  std::optional<double> noisy;
};

RetainedFractions retained_fractions(const std::vector<bool>& retained,
                                     const std::vector<bool>& noisy);

}  // namespace marvel
