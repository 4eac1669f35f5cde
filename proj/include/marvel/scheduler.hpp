#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "marvel/ledger.hpp"
#include "marvel/model.hpp"

namespace marvel {

enum class Method { ce, marvel, marvel_plus };

/// Where MARVEL+ takes its median/variance from: the current mini-batch,
/// or the previous epoch's full margin column over retained instances.
enum class StatsScope { batch, prev_epoch };

std::string to_string(Method method);
std::string to_string(StatsScope scope);
Method parse_method(const std::string& text);
StatsScope parse_stats_scope(const std::string& text);

struct SchedulerConfig {
  Method method = Method::marvel;
  int warm_up = 10;
  int wait = 4;
  StatsScope stats_scope = StatsScope::batch;
  double sigma_floor = 1e-8;

  void validate() const;
};

struct EpochMarginStats {
  double median = 0.0;
  double variance = 0.0;
};

struct BatchDecision {
  std::vector<double> loss_weights;    // normalized over the batch, for the gradient step
  std::vector<double> policy_weights;  // in [0,1], recorded in the ledger
  std::vector<double> margins;         // recorded in the ledger
  bool all_zero = false;               // every prior weight was zero; skip the step
};

/// Nonzero entries become 1.
std::vector<double> reset_nonzero(std::span<const double> weights);

/// Gaussian-shaped reweighting around the median: exp(-(m-mu)^2 / (2 var))
/// for m <= mu, e^{-1/2} above. Zero weights stay zero. The variance is
/// clamped from below by `sigma_floor`.
std::vector<double> adaptive_weights(std::span<const double> weights,
                                     std::span<const double> margins,
                                     const EpochMarginStats& stats, double sigma_floor = 1e-8);

/// Median and sample variance. Throws DegenerateStatsError for fewer than
/// two values.
EpochMarginStats epoch_stats(std::span<const double> margins);

/// Zeroes every weight whose window max is negative.
std::vector<double> apply_removal(std::span<const double> weights,
                                  std::span<const double> window_max);

/// Statistics for StatsScope::prev_epoch: finite margins of instances
/// retained at `epoch`. Empty when fewer than two qualify.
std::optional<EpochMarginStats> column_stats(const HistoryLedger& ledger, int epoch);

/// Weight policy for one mini-batch at `epoch` (1-based). `logits` and
/// `labels` are aligned with `indices`; labels use the encoding of `mode`.
/// `prev_stats` is consulted only for MARVEL+ with StatsScope::prev_epoch.
BatchDecision decide_batch(const SchedulerConfig& cfg, const HistoryLedger& ledger, int epoch,
                           std::span<const std::size_t> indices, const Logits& logits,
                           std::span<const int> labels, OutputMode mode,
                           const std::optional<EpochMarginStats>& prev_stats = std::nullopt);

}  // namespace marvel
