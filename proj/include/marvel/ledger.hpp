#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

namespace marvel {

/// Per-instance history of policy weights and margins, one column per epoch.
/// Column 0 holds the initial state (weight 1, margin +inf); columns
/// 1..epochs are filled by the training loop, each cell exactly once.
class HistoryLedger {
 public:
  HistoryLedger(std::size_t instances, int epochs);

  std::size_t instances() const noexcept { return instances_; }
  int epochs() const noexcept { return epochs_; }

  bool written(std::size_t instance, int epoch) const;
  double weight(std::size_t instance, int epoch) const;
  double margin(std::size_t instance, int epoch) const;

  /// True once every instance has a value for `epoch`.
  bool column_complete(int epoch) const;

  /// Weights recorded at `epoch` for the given instances.
  std::vector<double> weights_at(int epoch, std::span<const std::size_t> indices) const;
  std::vector<double> margins_at(int epoch, std::span<const std::size_t> indices) const;

  /// Writes cells (indices, epoch). Rejects double writes (StateError),
  /// weights outside [0,1] (DomainError) and nonzero weights for instances
  /// already removed at epoch-1 (InvariantError).
  void record(int epoch, std::span<const std::size_t> indices, std::span<const double> weights,
              std::span<const double> margins);

  /// Per-instance max over the `wait` most recent margins ending at `epoch`.
  /// `fresh` supplies the epoch column when it has not been recorded yet;
  /// otherwise the recorded column is used. Columns before 0 are clamped to
  /// 0, so any window reaching the initial column yields +inf.
  std::vector<double> window_max(int epoch, std::span<const std::size_t> indices, int wait,
                                 std::optional<std::span<const double>> fresh = std::nullopt) const;

  /// Indices whose weight at `epoch` is nonzero.
  std::vector<std::size_t> retained(int epoch) const;

  /// CSV dump: header `instance,epoch,weight,margin`, one row per written
  /// cell ordered by instance then epoch, infinities as `inf`.
  void write_csv(std::ostream& out) const;

 private:
  std::size_t cell(std::size_t instance, int epoch) const;
  void check_epoch(int epoch) const;

  std::size_t instances_;
  int epochs_;
  std::vector<double> weights_;
  std::vector<double> margins_;
  std::vector<std::uint8_t> written_;
  std::vector<std::size_t> column_fill_;
};

}  // namespace marvel
