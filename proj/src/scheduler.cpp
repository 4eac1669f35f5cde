#include "marvel/scheduler.hpp"

#include <algorithm>
#include <cmath>

#include "marvel/errors.hpp"
#include "marvel/margin.hpp"
#include "marvel/stats.hpp"

namespace marvel {

std::string to_string(Method method) {
  switch (method) {
    case Method::ce: return "ce";
    case Method::marvel: return "marvel";
    case Method::marvel_plus: return "marvel_plus";
  }
  return "?";
}

std::string to_string(StatsScope scope) {
  return scope == StatsScope::batch ? "batch" : "prev_epoch";
}

Method parse_method(const std::string& text) {
  if (text == "ce") return Method::ce;
  if (text == "marvel") return Method::marvel;
  if (text == "marvel_plus" || text == "marvel+") return Method::marvel_plus;
  throw DomainError("unknown method '" + text + "' (expected ce, marvel or marvel_plus)");
}

StatsScope parse_stats_scope(const std::string& text) {
  if (text == "batch") return StatsScope::batch;
  if (text == "prev_epoch") return StatsScope::prev_epoch;
  throw DomainError("unknown stats scope '" + text + "' (expected batch or prev_epoch)");
}

void SchedulerConfig::validate() const {
  if (warm_up < 1) throw DomainError("warm_up must be at least 1");
  if (wait < 1) throw DomainError("wait must be at least 1");
  if (!(sigma_floor > 0.0)) throw DomainError("sigma_floor must be positive");
}

std::vector<double> reset_nonzero(std::span<const double> weights) {
  std::vector<double> out(weights.size());
  std::transform(weights.begin(), weights.end(), out.begin(),
                 [](double w) { return w != 0.0 ? 1.0 : 0.0; });
  return out;
}

std::vector<double> adaptive_weights(std::span<const double> weights,
                                     std::span<const double> margins,
                                     const EpochMarginStats& stats, double sigma_floor) {
  if (weights.size() != margins.size()) throw ShapeError("weights and margins differ in length");
  const double var = std::max(stats.variance, sigma_floor);
  const double benchmark = std::exp(-0.5);
  std::vector<double> out(weights.size(), 0.0);
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (weights[i] == 0.0) continue;
    const double dm = margins[i] - stats.median;
    out[i] = margins[i] <= stats.median ? std::exp(-dm * dm / (2.0 * var)) : benchmark;
  }
  return out;
}

EpochMarginStats epoch_stats(std::span<const double> margins) {
  if (margins.size() < 2) {
    throw DegenerateStatsError("margin statistics need at least two values, got " +
                               std::to_string(margins.size()));
  }
  return {median(margins), sample_variance(margins)};
}

std::vector<double> apply_removal(std::span<const double> weights,
                                  std::span<const double> window_max) {
  if (weights.size() != window_max.size()) throw ShapeError("weights and windows differ in length");
  std::vector<double> out(weights.begin(), weights.end());
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (window_max[i] < 0.0) out[i] = 0.0;
  }
  return out;
}

std::optional<EpochMarginStats> column_stats(const HistoryLedger& ledger, int epoch) {
  if (!ledger.column_complete(epoch)) {
    throw StateError("epoch " + std::to_string(epoch) + " not fully recorded");
  }
  std::vector<double> values;
  for (std::size_t i = 0; i < ledger.instances(); ++i) {
    const double m = ledger.margin(i, epoch);
    if (ledger.weight(i, epoch) != 0.0 && std::isfinite(m)) values.push_back(m);
  }
  if (values.size() < 2) return std::nullopt;
  return epoch_stats(values);
}

BatchDecision decide_batch(const SchedulerConfig& cfg, const HistoryLedger& ledger, int epoch,
                           std::span<const std::size_t> indices, const Logits& logits,
                           std::span<const int> labels, OutputMode mode,
                           const std::optional<EpochMarginStats>& prev_stats) {
  const std::size_t b = indices.size();
  if (b == 0) throw ShapeError("empty batch");
  if (logits.rows() != b || labels.size() != b) {
    throw ShapeError("logits, labels and indices are not aligned");
  }
  if (epoch < 1 || epoch > ledger.epochs()) throw DomainError("epoch outside the ledger");

  BatchDecision d;
  const auto uniform = std::vector<double>(b, 1.0 / static_cast<double>(b));

  if (epoch <= cfg.warm_up) {
    d.loss_weights = uniform;
    d.policy_weights.assign(b, 1.0);
    d.margins = ledger.margins_at(epoch - 1, indices);
    return d;
  }

  d.margins = margins(logits, labels, mode);
  if (cfg.method == Method::ce) {
    d.loss_weights = uniform;
    d.policy_weights.assign(b, 1.0);
    return d;
  }

  const auto prior = ledger.weights_at(epoch - 1, indices);
  double total = 0.0;
  for (double w : prior) total += w;
  if (total == 0.0) {
    d.all_zero = true;
    d.loss_weights.assign(b, 0.0);
  } else {
    d.loss_weights.resize(b);
    for (std::size_t k = 0; k < b; ++k) d.loss_weights[k] = prior[k] / total;
  }

  auto policy = reset_nonzero(prior);
  if (cfg.method == Method::marvel_plus) {
    std::optional<EpochMarginStats> stats;
    if (cfg.stats_scope == StatsScope::batch) {
      std::vector<double> kept;
      for (std::size_t k = 0; k < b; ++k) {
        if (prior[k] != 0.0) kept.push_back(d.margins[k]);
      }
      if (kept.size() >= 2) stats = epoch_stats(kept);
    } else {
      stats = prev_stats;
    }
    // Degenerate statistics fall back to the binary reset weights.
    if (stats) policy = adaptive_weights(policy, d.margins, *stats, cfg.sigma_floor);
  }

  const auto window = ledger.window_max(epoch, indices, cfg.wait, std::span<const double>(d.margins));
  d.policy_weights = apply_removal(policy, window);
  return d;
}

}  // namespace marvel
