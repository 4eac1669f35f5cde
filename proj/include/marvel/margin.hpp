#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "marvel/model.hpp"

namespace marvel {

/// y * f for y in {-1,+1}.
double binary_margin(double logit, int label);

/// f_y - max_{j != y} f_j.
double multiclass_margin(std::span<const double> logits, int label);

/// Argmax; ties go to the lowest index.
std::size_t predict(std::span<const double> logits);

/// Sign rule for one-logit models: +1 if f > 0, else -1. A zero logit maps
/// to -1, matching predict() on the equivalent two-logit row (0, 0).
int predict_sign(double logit);

/// Per-row margins in the encoding of `mode` (labels +-1 or class indices).
std::vector<double> margins(const Logits& logits, std::span<const int> labels, OutputMode mode);

/// Per-row predicted labels in the encoding of `mode`.
std::vector<int> predictions(const Logits& logits, OutputMode mode);

}  // namespace marvel
