#include "marvel/margin.hpp"

#include <limits>
#include <string>

#include "marvel/errors.hpp"

namespace marvel {

double binary_margin(double logit, int label) {
  if (label != -1 && label != 1) {
    throw DomainError("binary label must be -1 or +1, got " + std::to_string(label));
  }
  return label * logit;
}

double multiclass_margin(std::span<const double> logits, int label) {
  if (logits.size() < 2) throw DomainError("multi-class margin needs at least two logits");
  if (label < 0 || static_cast<std::size_t>(label) >= logits.size()) {
    throw DomainError("class label " + std::to_string(label) + " out of range");
  }
  double best_other = -std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < logits.size(); ++j) {
    if (j != static_cast<std::size_t>(label) && logits[j] > best_other) best_other = logits[j];
  }
  return logits[static_cast<std::size_t>(label)] - best_other;
}

std::size_t predict(std::span<const double> logits) {
  if (logits.empty()) throw DomainError("cannot predict from empty logits");
  std::size_t best = 0;
  for (std::size_t j = 1; j < logits.size(); ++j) {
    if (logits[j] > logits[best]) best = j;
  }
  return best;
}

int predict_sign(double logit) { return logit > 0.0 ? 1 : -1; }

std::vector<double> margins(const Logits& logits, std::span<const int> labels, OutputMode mode) {
  if (labels.size() != logits.rows()) throw ShapeError("labels do not match logits rows");
  std::vector<double> out(labels.size());
  for (std::size_t r = 0; r < labels.size(); ++r) {
    out[r] = mode == OutputMode::binary_logit ? binary_margin(logits(r, 0), labels[r])
                                              : multiclass_margin(logits.row(r), labels[r]);
  }
  return out;
}

std::vector<int> predictions(const Logits& logits, OutputMode mode) {
  std::vector<int> out(logits.rows());
  for (std::size_t r = 0; r < logits.rows(); ++r) {
    out[r] = mode == OutputMode::binary_logit ? predict_sign(logits(r, 0))
                                              : static_cast<int>(predict(logits.row(r)));
  }
  return out;
}

}  // namespace marvel
